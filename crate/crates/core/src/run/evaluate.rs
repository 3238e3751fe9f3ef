use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{read_json, write_atomic, write_json};
use crate::error::{Error, EvalError, Result};
use crate::evaluation::{agreement, parse_gt, summarize, CrcConfig, Lexicon, MetricSummary, Pair, T3Mode};
use crate::metric::Metric;
use crate::normalization::NormalizedPanel;
use crate::reasoning::{parse_report, StateLabel, StructuredReport};

/// One line of a prediction or ground-truth CSV: `subject,trial,gt,pred`.
/// Empty `gt` marks an unlabeled trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub subject: String,
    pub trial: String,
    #[serde(default)]
    pub gt: String,
    #[serde(default)]
    pub pred: String,
}

impl PredictionRow {
    pub fn key(&self) -> String {
        format!("{}_{}", self.subject, self.trial)
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let rows: Vec<PredictionRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = rows.iter().find(|row| !seen.insert(row.key())) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!("duplicate trial {}", dup.key()),
        });
    }
    Ok(rows)
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluateOptions {
    /// Ground truth replacing the `gt` column, aligned by (subject, trial).
    pub gt: Option<PathBuf>,
    /// Run directory or prediction CSV to compute C1 against.
    pub baseline: Option<PathBuf>,
    pub t3: T3Mode,
    pub lexicon: Option<PathBuf>,
}

fn rows_of(source: &Path) -> Result<Vec<PredictionRow>> {
    if source.is_dir() {
        read_predictions(&source.join("predictions.csv"))
    } else {
        read_predictions(source)
    }
}

fn parse_pred(s: &str) -> std::result::Result<StateLabel, EvalError> {
    s.parse::<StateLabel>().map_err(|_| EvalError::BadLabel(s.to_string()))
}

fn key_mismatch(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Option<EvalError> {
    let diff: Vec<String> = a.symmetric_difference(b).cloned().collect();
    (!diff.is_empty()).then_some(EvalError::TrialSetMismatch(diff))
}

fn pred_map(rows: &[PredictionRow]) -> Result<BTreeMap<String, StateLabel>> {
    rows.iter().map(|r| Ok((r.key(), parse_pred(&r.pred)?))).collect()
}

/// High vagal tone reference for T3 in vagal mode: the sign of the RMSSD
/// within-subject evidence (z_S6, else the raw delta).
fn vagal_reference(run_dir: &Path, key: &str) -> Option<bool> {
    let panel: NormalizedPanel = read_json(&run_dir.join("trials").join(key).join("normalized.json")).ok()?;
    let e = panel.get(Metric::Rmssd)?;
    e.z_s6.or(e.delta).map(|z| z > 0.0)
}

/// Scores a run directory or a prediction CSV.
pub fn evaluate_run(source: &Path, opts: &EvaluateOptions) -> Result<MetricSummary> {
    let mut rows = rows_of(source)?;
    if let Some(gt_path) = &opts.gt {
        let gt_rows = read_predictions(gt_path)?;
        let gt: BTreeMap<String, String> = gt_rows.into_iter().map(|r| (r.key(), r.gt)).collect();
        let mine: BTreeSet<String> = rows.iter().map(PredictionRow::key).collect();
        if let Some(e) = key_mismatch(&mine, &gt.keys().cloned().collect()) {
            return Err(e.into());
        }
        for r in &mut rows {
            r.gt = gt[&r.key()].clone();
        }
    }
    let run_dir = source.is_dir().then_some(source);
    let mut pairs = Vec::new();
    for r in rows.iter().filter(|r| !r.gt.trim().is_empty()) {
        pairs.push(Pair {
            subject: r.subject.clone(),
            trial: r.trial.clone(),
            gt: parse_gt(&r.gt)?,
            pred: parse_pred(&r.pred)?,
            vagal_high: run_dir.and_then(|d| vagal_reference(d, &r.key())),
        });
    }
    let reports: Option<BTreeMap<String, StructuredReport>> = match run_dir {
        Some(d) => Some(
            rows.iter()
                .map(|r| {
                    let p = d.join("trials").join(r.key()).join("report.json");
                    let rep = if p.exists() { read_json(&p)? } else { parse_report("") };
                    Ok((r.key(), rep))
                })
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let lexicon = match &opts.lexicon {
        Some(p) => Lexicon::from_file(p)?,
        None => Lexicon::default(),
    };
    let crc_cfg = CrcConfig {
        lexicon,
        ..CrcConfig::default()
    };
    let mut summary = summarize(&pairs, reports.as_ref(), None, &crc_cfg, opts.t3)?;
    summary.trials = rows.len();
    if let Some(b) = &opts.baseline {
        let base = pred_map(&rows_of(b)?)?;
        summary.c1 = Some(agreement(&pred_map(&rows)?, &base)?);
    }
    Ok(summary)
}

/// Writes `metrics.json` and `metrics.txt` into `dir`.
pub fn write_summary(dir: &Path, summary: &MetricSummary) -> Result<()> {
    write_json(&dir.join("metrics.json"), summary)?;
    write_atomic(&dir.join("metrics.txt"), summary.to_table().as_bytes())
}
