use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metric::Metric;
use crate::reasoning::StructuredReport;

const DEFAULT_LEXICON: &str = include_str!("lexicon.json");

/// Metrics scored by the consistency check.
pub const CRC_METRICS: [Metric; 7] = [
    Metric::Rmssd,
    Metric::Sdnn,
    Metric::Pnn50,
    Metric::MeanHr,
    Metric::LfHf,
    Metric::SampEn,
    Metric::DfaAlpha,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

/// Per-metric keyword sets for rises (`positive`) and falls (`negative`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon {
    pub metrics: BTreeMap<Metric, KeywordSet>,
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let lex: Lexicon = serde_json::from_str(text)?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Positive and negative sets must not share a keyword.
    pub fn validate(&self) -> Result<(), Error> {
        for (m, set) in &self.metrics {
            let pos: Vec<String> = set.positive.iter().map(|k| normalize_text(k)).collect();
            if let Some(k) = set.negative.iter().map(|k| normalize_text(k)).find(|k| pos.contains(k)) {
                return Err(Error::Config(format!("lexicon keyword {k:?} is both positive and negative for {m}")));
            }
        }
        Ok(())
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrcConfig {
    pub tau: f64,
    pub lexicon: Lexicon,
}

impl Default for CrcConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            lexicon: Lexicon::default(),
        }
    }
}

/// Lower-cases and collapses whitespace runs to single spaces.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Number of keywords contained in `normalized` (each counted at most once).
pub fn count_keywords(normalized: &str, keywords: &[String]) -> usize {
    keywords.iter().filter(|k| normalized.contains(&normalize_text(k))).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Consistent,
    Inconsistent,
    Neutral,
    NoKeywords,
    /// Both polarities matched equally often; counted in neither CRC term.
    Tied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCheck {
    pub metric: Metric,
    pub z: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub outcome: CheckOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CheckTally {
    pub consistent: usize,
    pub inconsistent: usize,
    pub neutral: usize,
    pub no_keywords: usize,
    pub tied: usize,
}

impl CheckTally {
    pub fn add(&mut self, o: CheckOutcome) {
        match o {
            CheckOutcome::Consistent => self.consistent += 1,
            CheckOutcome::Inconsistent => self.inconsistent += 1,
            CheckOutcome::Neutral => self.neutral += 1,
            CheckOutcome::NoKeywords => self.no_keywords += 1,
            CheckOutcome::Tied => self.tied += 1,
        }
    }

    pub fn merge(&mut self, o: &CheckTally) {
        self.consistent += o.consistent;
        self.inconsistent += o.inconsistent;
        self.neutral += o.neutral;
        self.no_keywords += o.no_keywords;
        self.tied += o.tied;
    }

    /// Consistent + inconsistent: the checks that enter the CRC ratio.
    pub fn countable(&self) -> usize {
        self.consistent + self.inconsistent
    }

    pub fn ratio(&self) -> Option<f64> {
        (self.countable() > 0).then(|| self.consistent as f64 / self.countable() as f64)
    }
}

pub fn classify_check(z: f64, n_pos: usize, n_neg: usize, tau: f64) -> CheckOutcome {
    if z.abs() <= tau {
        CheckOutcome::Neutral
    } else if n_pos == 0 && n_neg == 0 {
        CheckOutcome::NoKeywords
    } else if n_pos == n_neg {
        CheckOutcome::Tied
    } else if (z > 0.0) == (n_pos > n_neg) {
        CheckOutcome::Consistent
    } else {
        CheckOutcome::Inconsistent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCrc {
    pub checks: Vec<MetricCheck>,
    pub tally: CheckTally,
    /// `None` when no check was countable.
    pub crc: Option<f64>,
}

pub fn crc_report(report: &StructuredReport, cfg: &CrcConfig) -> ReportCrc {
    let text = normalize_text(&report.raw_text);
    let mut checks = Vec::new();
    let mut tally = CheckTally::default();
    for m in CRC_METRICS {
        let Some(&z) = report.z_scores_cited.get(&m) else { continue };
        let (n_pos, n_neg) = cfg
            .lexicon
            .metrics
            .get(&m)
            .map_or((0, 0), |k| (count_keywords(&text, &k.positive), count_keywords(&text, &k.negative)));
        let outcome = classify_check(z, n_pos, n_neg, cfg.tau);
        tally.add(outcome);
        checks.push(MetricCheck {
            metric: m,
            z,
            n_pos,
            n_neg,
            outcome,
        });
    }
    ReportCrc {
        checks,
        crc: tally.ratio(),
        tally,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCrc {
    /// Mean of per-report CRC over reports with at least one countable check.
    pub report_mean: Option<f64>,
    /// Consistent / countable, pooled over every check.
    pub check_weighted: Option<f64>,
    pub reports_scored: usize,
    pub reports_excluded: usize,
    pub tally: CheckTally,
}

pub fn corpus_crc(reports: &[ReportCrc]) -> CorpusCrc {
    let mut tally = CheckTally::default();
    let scores: Vec<f64> = reports
        .iter()
        .inspect(|r| tally.merge(&r.tally))
        .filter_map(|r| r.crc)
        .collect();
    CorpusCrc {
        report_mean: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
        check_weighted: tally.ratio(),
        reports_scored: scores.len(),
        reports_excluded: reports.len() - scores.len(),
        tally,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoning::parse_report;

    fn crc_of(text: &str) -> ReportCrc {
        crc_report(&parse_report(text), &CrcConfig::default())
    }

    #[test]
    fn bundled_lexicon_covers_the_seven_metrics() {
        let lex = Lexicon::default();
        for m in CRC_METRICS {
            assert!(lex.metrics.contains_key(&m), "{m}");
        }
        assert!(Lexicon::from_json(r#"{"RMSSD":{"positive":["a b"],"negative":["A  B"]}}"#).is_err());
    }

    #[test]
    fn single_metric_cases() {
        assert_eq!(crc_of("RMSSD (z = 1.2) shows increased vagal tone.").crc, Some(1.0));
        assert_eq!(crc_of("RMSSD (z = 1.2) shows reduced vagal tone.").crc, Some(0.0));
        let r = crc_of("RMSSD (z = 0.5) shows increased vagal tone.");
        assert_eq!((r.crc, r.tally.neutral), (None, 1));
        let r = crc_of("RMSSD (z = -2.0) is notable.");
        assert_eq!((r.crc, r.tally.no_keywords), (None, 1));
    }

    #[test]
    fn mixed_report_halves() {
        let r = crc_of("RMSSD (z = 1.2) increased vagal. MeanHR (z = 0.9) with lowered heart rate.");
        assert_eq!(r.crc, Some(0.5));
    }

    #[test]
    fn matching_is_case_and_space_insensitive() {
        assert_eq!(crc_of("RMSSD z: -1.0 and   Vagal\nWITHDRAWAL").crc, Some(1.0));
    }

    #[test]
    fn corpus_means() {
        let reports = vec![
            crc_of("RMSSD (z = 1.2) increased vagal."),
            crc_of("RMSSD (z = 1.2) increased vagal. SDNN (z = 1.0) reduced overall variability. MeanHR (z = 2) lowered heart rate"),
            crc_of("nothing here"),
        ];
        let c = corpus_crc(&reports);
        assert_eq!(c.reports_scored, 2);
        assert_eq!(c.reports_excluded, 1);
        assert!((c.report_mean.unwrap() - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((c.check_weighted.unwrap() - 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn ties_are_not_counted() {
        assert_eq!(classify_check(1.0, 1, 1, 0.5), CheckOutcome::Tied);
        assert_eq!(classify_check(-1.0, 0, 2, 0.5), CheckOutcome::Consistent);
        assert_eq!(classify_check(-1.0, 3, 2, 0.5), CheckOutcome::Inconsistent);
    }
}
