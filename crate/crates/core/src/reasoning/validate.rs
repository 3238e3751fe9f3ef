use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Confidence, StructuredReport};
use crate::evaluation::{count_keywords, normalize_text};
use crate::metric::Metric;
use crate::normalization::NormalizedPanel;
use crate::signal::FeaturePanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericHallucination {
    pub metric: Metric,
    pub claimed: f64,
    pub allowed: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZConflict {
    pub metric: Metric,
    pub cited: f64,
    pub panel_z_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckFailure {
    pub quantity: String,
    pub claimed: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub numeric_hallucinations: Vec<NumericHallucination>,
    pub repetition_truncated: bool,
    pub z_delta_conflicts_flagged: Vec<ZConflict>,
    pub plot_crosscheck_failures: Vec<CrossCheckFailure>,
    /// Words with a Greek letter spliced between Latin letters.
    pub greek_substitutions: Vec<String>,
    pub mapping_paradox: bool,
    pub regenerated: bool,
    pub actions_taken: Vec<String>,
}

/// Keyword sets that place a rationale on the arousal axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArousalLexicon {
    pub high: Vec<String>,
    pub low: Vec<String>,
}

impl Default for ArousalLexicon {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            high: v(&[
                "stress",
                "sympathetic activation",
                "fight-or-flight",
                "high arousal",
                "elevated arousal",
                "heightened arousal",
                "anxiety",
                "tension",
                "excitement",
                "vigilance",
                "agitation",
            ]),
            low: v(&[
                "calm",
                "relaxation",
                "relaxed",
                "low arousal",
                "reduced arousal",
                "drowsiness",
                "resting state",
                "tranquil",
                "parasympathetic dominance",
            ]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    pub mean_hr_range: (f64, f64),
    pub rmssd_range: (f64, f64),
    pub mean_rr_range: (f64, f64),
    /// Relative tolerance for N_poincare and band-power cross-checks.
    pub crosscheck_tolerance: f64,
    pub arousal: ArousalLexicon,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            mean_hr_range: (40.0, 200.0),
            rmssd_range: (0.0, 500.0),
            mean_rr_range: (300.0, 2000.0),
            crosscheck_tolerance: 0.05,
            arousal: ArousalLexicon::default(),
        }
    }
}

const NUM: &str = r"([+\-−]?\d+(?:\.\d+)?)";

static HR_CLAIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?i)\b(?:mean\s*hr|heart\s+rate|hr)\b[^\d\n+\-−]{{0,30}}{NUM}\s*bpm")).expect("static regex")
});
static RMSSD_CLAIM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)\brmssd\b[^\d\n+\-−]{{0,30}}{NUM}\s*ms\b")).expect("static regex"));
static RR_CLAIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?i)\bmean\s*rr\b[^\d\n+\-−]{{0,30}}{NUM}\s*ms\b")).expect("static regex")
});
static POINCARE_CLAIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:\bn_poincar[eé]\s*[=:]?\s*(\d+)|(\d+)\s+(?:poincar[eé]\s+)?(?:scatter\s+)?points\b)")
        .expect("static regex")
});
static BAND_CLAIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?i)\b(ulf|lf|hf)\s+power\s*(?:of|=|:|is|was)?\s*{NUM}\s*ms(?:²|2|\^2)")).expect("static regex")
});
static GREEK_IN_LATIN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z]+[\p{Greek}]+[A-Za-z]+").expect("static regex"));

fn num(s: &str) -> Option<f64> {
    s.replace('−', "-").parse().ok().filter(|v: &f64| v.is_finite())
}

fn range_checks(text: &str, cfg: &ValidationConfig) -> Vec<NumericHallucination> {
    let mut out = Vec::new();
    let rules: [(&Regex, Metric, (f64, f64)); 3] = [
        (&HR_CLAIM, Metric::MeanHr, cfg.mean_hr_range),
        (&RMSSD_CLAIM, Metric::Rmssd, cfg.rmssd_range),
        (&RR_CLAIM, Metric::MeanRr, cfg.mean_rr_range),
    ];
    for (re, metric, (lo, hi)) in rules {
        for c in re.captures_iter(text) {
            if let Some(v) = num(&c[1]) {
                if v < lo || v > hi {
                    out.push(NumericHallucination {
                        metric,
                        claimed: v,
                        allowed: (lo, hi),
                    });
                }
            }
        }
    }
    out
}

fn rel_mismatch(claimed: f64, actual: f64, tol: f64) -> bool {
    let scale = actual.abs().max(f64::EPSILON);
    (claimed - actual).abs() / scale > tol
}

fn cross_checks(text: &str, features: &FeaturePanel, tol: f64) -> Vec<CrossCheckFailure> {
    let mut out = Vec::new();
    let n = features.poincare.n_points as f64;
    for c in POINCARE_CLAIM.captures_iter(text) {
        let Some(v) = c.get(1).or(c.get(2)).and_then(|m| num(m.as_str())) else { continue };
        if rel_mismatch(v, n, tol) {
            out.push(CrossCheckFailure {
                quantity: "N_poincare".into(),
                claimed: v,
                actual: n,
            });
        }
    }
    if let Some(f) = &features.freq {
        for c in BAND_CLAIM.captures_iter(text) {
            let Some(v) = num(&c[2]) else { continue };
            let band = c[1].to_ascii_uppercase();
            let actual = match band.as_str() {
                "ULF" => f.band_powers.ulf,
                "LF" => f.band_powers.lf,
                _ => f.band_powers.hf,
            };
            if rel_mismatch(v, actual, tol) {
                out.push(CrossCheckFailure {
                    quantity: format!("{band} power"),
                    claimed: v,
                    actual,
                });
            }
        }
    }
    out
}

fn z_sign_conflicts(report: &StructuredReport, panel: &NormalizedPanel) -> Vec<ZConflict> {
    report
        .z_scores_cited
        .iter()
        .filter_map(|(m, &cited)| {
            let z = panel.get(*m)?.z_delta?;
            (cited * z < 0.0).then_some(ZConflict {
                metric: *m,
                cited,
                panel_z_delta: z,
            })
        })
        .collect()
}

/// True when the rationale's arousal vocabulary points the other way from
/// the label's arousal half. A rationale without arousal keywords never flags.
pub fn detect_mapping_paradox(report: &StructuredReport, lex: &ArousalLexicon) -> bool {
    let Some(high_label) = report.state.high_arousal() else { return false };
    let source = if report.rationale.is_empty() { &report.raw_text } else { &report.rationale };
    let text = normalize_text(source);
    let high = count_keywords(&text, &lex.high);
    let low = count_keywords(&text, &lex.low);
    if high_label {
        low > high
    } else {
        high > low
    }
}

/// Read-only checks over a parsed report. The state label is never touched.
pub fn validate(
    report: &StructuredReport,
    features: &FeaturePanel,
    panel: &NormalizedPanel,
    cfg: &ValidationConfig,
) -> ValidationResult {
    let text = &report.raw_text;
    let mut v = ValidationResult {
        numeric_hallucinations: range_checks(text, cfg),
        z_delta_conflicts_flagged: z_sign_conflicts(report, panel),
        plot_crosscheck_failures: cross_checks(text, features, cfg.crosscheck_tolerance),
        greek_substitutions: GREEK_IN_LATIN.find_iter(text).map(|m| m.as_str().to_string()).collect(),
        mapping_paradox: detect_mapping_paradox(report, &cfg.arousal),
        ..ValidationResult::default()
    };
    for h in &v.numeric_hallucinations {
        v.actions_taken
            .push(format!("flagged {} = {} outside [{}, {}]", h.metric, h.claimed, h.allowed.0, h.allowed.1));
    }
    for c in &v.z_delta_conflicts_flagged {
        v.actions_taken
            .push(format!("flagged {} z = {} against panel z_delta = {:.2}", c.metric, c.cited, c.panel_z_delta));
    }
    for c in &v.plot_crosscheck_failures {
        v.actions_taken
            .push(format!("flagged {} claim {} against quantitative {}", c.quantity, c.claimed, c.actual));
    }
    if !v.greek_substitutions.is_empty() {
        v.actions_taken.push(format!("annotated {} Greek-letter substitutions", v.greek_substitutions.len()));
    }
    v
}

/// Lowers confidence by one level; a missing confidence becomes Low.
pub fn downgrade(confidence: Option<Confidence>) -> Confidence {
    confidence.map_or(Confidence::Low, Confidence::downgrade)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalization::{build_baseline, normalize, BaselineMode, NormConfig, PopulationStats};
    use crate::reasoning::{parse_report, StateLabel};
    use crate::test_support::panel_with;

    fn fixture() -> (FeaturePanel, NormalizedPanel) {
        let ps: Vec<_> = [30.0, 40.0, 50.0].iter().map(|&r| panel_with(r, 70.0)).collect();
        let b = build_baseline("S1", &ps.iter().collect::<Vec<_>>(), BaselineMode::Retrospective).unwrap();
        let f = panel_with(60.0, 70.0);
        let n = normalize(&f, &PopulationStats::default(), Some(&b), &NormConfig::default());
        (f, n)
    }

    fn check(text: &str) -> ValidationResult {
        let (f, n) = fixture();
        validate(&parse_report(text), &f, &n, &ValidationConfig::default())
    }

    #[test]
    fn range_hallucinations() {
        let v = check("State: HVHA\nRationale: MeanHR of 250 bpm and RMSSD reached 600 ms.");
        let got: Vec<(Metric, f64)> = v.numeric_hallucinations.iter().map(|h| (h.metric, h.claimed)).collect();
        assert_eq!(got, vec![(Metric::MeanHr, 250.0), (Metric::Rmssd, 600.0)]);
        let ok = check("State: HVHA\nRationale: MeanHR of 72 bpm, RMSSD 60 ms, 120 Poincaré points.");
        assert!(ok.numeric_hallucinations.is_empty());
        assert!(ok.plot_crosscheck_failures.is_empty());
        assert!(ok.z_delta_conflicts_flagged.is_empty());
    }

    #[test]
    fn plot_crosschecks() {
        let v = check("N_poincare = 140 and LF power = 410 ms² while HF power is 500 ms²");
        let q: Vec<&str> = v.plot_crosscheck_failures.iter().map(|c| c.quantity.as_str()).collect();
        assert_eq!(q, vec!["N_poincare", "HF power"]);
        // 5% is the edge
        assert!(check("N_poincare = 126").plot_crosscheck_failures.is_empty());
        assert_eq!(check("N_poincare = 127").plot_crosscheck_failures.len(), 1);
    }

    #[test]
    fn z_sign_against_panel() {
        let v = check("RMSSD (z = -1.0) fell.");
        assert_eq!(v.z_delta_conflicts_flagged.len(), 1);
        assert_eq!(v.z_delta_conflicts_flagged[0].metric, Metric::Rmssd);
        assert!(check("RMSSD (z = 2.0) rose.").z_delta_conflicts_flagged.is_empty());
    }

    #[test]
    fn greek_letters_inside_words() {
        let v = check("par\u{03b1}sympathetic tone and α-amylase and DFA α");
        assert_eq!(v.greek_substitutions, vec!["par\u{03b1}sympathetic".to_string()]);
    }

    #[test]
    fn mapping_paradox_cases() {
        let lex = ArousalLexicon::default();
        let r = parse_report("State: LVLA\nRationale: an acute stress response with sympathetic activation.");
        assert!(detect_mapping_paradox(&r, &lex));
        let r = parse_report("State: HVHA\nRationale: focused engagement, elevated arousal.");
        assert!(!detect_mapping_paradox(&r, &lex));
        let r = parse_report("State: LVHA\nRationale: metrics moved.");
        assert!(!detect_mapping_paradox(&r, &lex));
        let r = parse_report("State: Unknown\nRationale: stress everywhere.");
        assert_eq!(r.state, StateLabel::Unknown);
        assert!(!detect_mapping_paradox(&r, &lex));
    }

    #[test]
    fn validation_preserves_the_report() {
        let (f, n) = fixture();
        let r = parse_report("State: LVLA\nConfidence: High\nRationale: stress, MeanHR 250 bpm");
        let before = r.clone();
        let v = validate(&r, &f, &n, &ValidationConfig::default());
        assert!(v.mapping_paradox);
        assert_eq!(r, before);
        assert_eq!(downgrade(Some(Confidence::High)), Confidence::Medium);
        assert_eq!(downgrade(None), Confidence::Low);
    }
}
