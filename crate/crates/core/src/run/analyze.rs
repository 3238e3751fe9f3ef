use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{write_atomic, write_json};
use super::{write_predictions, PredictionRow, RunConfig};
use crate::error::{Error, Result};
use crate::evaluation::{construct_label, gt_str};
use crate::guardrails;
use crate::normalization::{baseline_for_trial, normalize, BaselineProfile, PopulationStats};
use crate::reasoning::{run_pipeline, CompletionClient, EegFeatures, Knowledge, LogEvent, StateLabel, TrialInput};
use crate::signal::trial::Trial;
use crate::signal::{extract_features, FeaturePanel};

/// Why a trial produced no report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialFailureRecord {
    pub key: String,
    pub step: Option<u8>,
    pub reason: String,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub created_at: String,
    /// Ablation row label when the switches match one of the five rows.
    pub row: Option<String>,
    pub backend: String,
    pub embedder: Option<String>,
    pub store_chunks: Option<usize>,
    pub population_source: String,
    pub trials: usize,
    pub succeeded: usize,
    pub failed: Vec<TrialFailureRecord>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub predictions: Vec<PredictionRow>,
}

impl RunSummary {
    /// 0 when every trial succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.manifest.failed.is_empty())
    }
}

/// RFC 3339 stamp from `SOURCE_DATE_EPOCH` when set, else the clock.
pub fn run_timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0));
    pinned
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn eeg_of(t: &Trial) -> Option<EegFeatures> {
    let m = t.eeg.as_ref()?;
    let pick = |a: &str, b: &str| m.get(a).or_else(|| m.get(b)).copied();
    Some(EegFeatures {
        alpha_power: pick("alpha_power", "alpha")?,
        beta_power: pick("beta_power", "beta")?,
    })
}

fn gt_cell(t: &Trial) -> String {
    match (t.valence, t.arousal) {
        (Some(v), Some(a)) => construct_label(i64::from(v), i64::from(a))
            .map(|g| gt_str(g.label).to_string())
            .unwrap_or_default(),
        _ => String::new(),
    }
}

enum Stage {
    FeaturesFailed(String),
    Ready {
        input: Box<TrialInput>,
        baseline: Option<BaselineProfile>,
    },
}

/// Runs the pipeline over `trials` and writes a self-describing run
/// directory. Per-trial failures are recorded, not raised.
pub fn analyze(
    trials: &[Trial],
    cfg: &RunConfig,
    knowledge: Option<Knowledge>,
    client: &dyn CompletionClient,
    out: &Path,
    created_at: &str,
) -> Result<RunSummary> {
    let cfg = cfg.effective();
    cfg.validate()?;
    if trials.is_empty() {
        return Err(Error::Config("no trials to analyze".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(t) = trials.iter().find(|t| !seen.insert(t.key())) {
        return Err(Error::Config(format!("duplicate trial {}", t.key())));
    }
    if cfg.ablation.rag {
        let k = knowledge.ok_or_else(|| Error::Config("retrieval is enabled but no literature store was given".into()))?;
        if k.store.embedder != k.embedder.id() {
            return Err(Error::Config(format!(
                "store was built with embedder {} but {} is configured",
                k.store.embedder,
                k.embedder.id()
            )));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let features: Vec<std::result::Result<FeaturePanel, String>> = pool.install(|| {
        trials
            .par_iter()
            .map(|t| extract_features(&t.rr_series(), t.resp.as_ref(), &cfg.features).map_err(|e| e.to_string()))
            .collect()
    });

    let (pop, population_source) = match &cfg.paths.population_stats {
        Some(p) => (PopulationStats::from_json_file(p)?, format!("file:{}", p.display())),
        None => (
            PopulationStats::from_cohort(features.iter().filter_map(|f| f.as_ref().ok())),
            "cohort".to_string(),
        ),
    };

    // subject -> indices of usable trials in input order
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (t, f)) in trials.iter().zip(&features).enumerate() {
        if f.is_ok() {
            by_subject.entry(t.subject_id.as_str()).or_default().push(i);
        }
    }
    let mut baselines: BTreeMap<usize, BaselineProfile> = BTreeMap::new();
    let mut subject_profiles: BTreeMap<String, BaselineProfile> = BTreeMap::new();
    for (subject, idx) in &by_subject {
        let panels: Vec<&FeaturePanel> = idx.iter().filter_map(|&i| features[i].as_ref().ok()).collect();
        for (j, &i) in idx.iter().enumerate() {
            if let Ok(b) = baseline_for_trial(subject, &panels, j, cfg.normalization.baseline_mode) {
                baselines.insert(i, b);
            }
        }
        if let Ok(b) = baseline_for_trial(subject, &panels, panels.len(), cfg.normalization.baseline_mode) {
            subject_profiles.insert(subject.to_string(), b);
        }
    }

    let stages: Vec<Stage> = trials
        .iter()
        .zip(features)
        .enumerate()
        .map(|(i, (t, f))| match f {
            Err(e) => Stage::FeaturesFailed(e),
            Ok(features) => {
                let baseline = baselines.remove(&i);
                let panel = normalize(&features, &pop, baseline.as_ref(), &cfg.normalization);
                let guardrails = guardrails::evaluate(&features, &panel, &cfg.guardrails);
                Stage::Ready {
                    input: Box::new(TrialInput {
                        features,
                        panel,
                        guardrails,
                        eeg: eeg_of(t),
                    }),
                    baseline,
                }
            }
        })
        .collect();

    let outcomes: Vec<_> = pool.install(|| {
        stages
            .par_iter()
            .map(|s| match s {
                Stage::FeaturesFailed(_) => None,
                Stage::Ready { input, .. } => Some(run_pipeline(input, knowledge, client, &cfg.pipeline)),
            })
            .collect()
    });

    for sub in ["trials", "baselines"] {
        let d = out.join(sub);
        if d.exists() {
            fs::remove_dir_all(&d)?;
        }
    }
    let mut log: Vec<LogEvent> = Vec::new();
    let mut failed = Vec::new();
    let mut predictions = Vec::new();
    for ((t, stage), outcome) in trials.iter().zip(&stages).zip(outcomes) {
        let key = t.key();
        let dir = out.join("trials").join(&key);
        let mut pred = StateLabel::Unknown;
        match (stage, outcome) {
            (Stage::FeaturesFailed(reason), _) => {
                log.push(LogEvent {
                    trial: key.clone(),
                    step: None,
                    event: "features_failed".into(),
                    detail: reason.clone(),
                });
                let rec = TrialFailureRecord {
                    key: key.clone(),
                    step: None,
                    reason: format!("feature extraction: {reason}"),
                };
                write_json(&dir.join("failure.json"), &rec)?;
                failed.push(rec);
            }
            (Stage::Ready { input, baseline }, Some(result)) => {
                write_json(&dir.join("features.json"), &input.features)?;
                write_json(&dir.join("normalized.json"), &input.panel)?;
                write_json(&dir.join("guardrails.json"), &input.guardrails)?;
                if let Some(b) = baseline {
                    write_json(&dir.join("baseline.json"), b)?;
                }
                let (steps, events) = match result {
                    Ok(o) => {
                        pred = o.report.state;
                        write_json(&dir.join("report.json"), &o.report)?;
                        write_json(&dir.join("validation.json"), &o.validation)?;
                        (o.steps, o.log)
                    }
                    Err(f) => {
                        let rec = TrialFailureRecord {
                            key: key.clone(),
                            step: f.step,
                            reason: f.reason.clone(),
                        };
                        write_json(&dir.join("failure.json"), &rec)?;
                        failed.push(rec);
                        (f.steps, f.log)
                    }
                };
                for s in &steps {
                    write_json(&dir.join("steps").join(format!("step{}.json", s.step)), s)?;
                }
                log.extend(events);
            }
            (Stage::Ready { .. }, None) => unreachable!("every ready trial is run"),
        }
        predictions.push(PredictionRow {
            subject: t.subject_id.clone(),
            trial: t.trial_id.clone(),
            gt: gt_cell(t),
            pred: pred.as_str().to_string(),
        });
    }

    for (subject, b) in &subject_profiles {
        write_json(&out.join("baselines").join(format!("{subject}.json")), b)?;
    }
    write_json(&out.join("population.json"), &pop)?;
    write_predictions(&out.join("predictions.csv"), &predictions)?;
    let mut jsonl = Vec::new();
    for e in &log {
        serde_json::to_writer(&mut jsonl, e)?;
        jsonl.push(b'\n');
    }
    write_atomic(&out.join("run_log.jsonl"), &jsonl)?;

    let manifest = RunManifest {
        tool: format!("hrvguard {}", env!("CARGO_PKG_VERSION")),
        created_at: created_at.to_string(),
        row: cfg.row().map(|r| r.label().to_string()),
        backend: client.id(),
        embedder: knowledge.filter(|_| cfg.ablation.rag).map(|k| k.embedder.id()),
        store_chunks: knowledge.filter(|_| cfg.ablation.rag).map(|k| k.store.len()),
        population_source,
        trials: trials.len(),
        succeeded: trials.len() - failed.len(),
        failed,
        config: cfg,
    };
    write_json(&out.join("run.json"), &manifest)?;
    Ok(RunSummary {
        dir: out.to_path_buf(),
        manifest,
        predictions,
    })
}
