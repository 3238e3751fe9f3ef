use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::{write_atomic, write_json};
use super::{analyze, evaluate_run, write_summary, AblationRow, EvaluateOptions, RunConfig, Switches};
use crate::error::{Error, Result};
use crate::evaluation::{agreement, MetricSummary};
use crate::reasoning::{CompletionClient, Knowledge, StateLabel};
use crate::signal::trial::Trial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub row: AblationRow,
    pub label: String,
    pub switches: Switches,
    pub dir: String,
    pub succeeded: usize,
    pub failed: usize,
    /// `None` when the trials carry no usable labels.
    pub metrics: Option<MetricSummary>,
    pub c1_vs_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub entries: Vec<AblationEntry>,
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"))
}

impl AblationReport {
    pub fn to_table(&self) -> String {
        let on = |b: bool| if b { "on" } else { "off" };
        let header = [
            "Config", "RAG", "Guard", "ΔZ", "OK", "T1", "T2", "T3", "Q1", "Q2", "Q3", "Q4", "C1", "WAD",
        ];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for e in &self.entries {
            let m = e.metrics.as_ref();
            let q = m.and_then(|m| m.quality);
            rows.push(vec![
                e.label.clone(),
                on(e.switches.rag).into(),
                on(e.switches.guardrails).into(),
                on(e.switches.delta_z).into(),
                format!("{}/{}", e.succeeded, e.succeeded + e.failed),
                pct(m.map(|m| m.task.t1)),
                pct(m.map(|m| m.task.t2)),
                pct(m.map(|m| m.task.t3)),
                pct(q.map(|q| q.q1)),
                pct(q.map(|q| q.q2)),
                pct(q.map(|q| q.q3)),
                pct(q.map(|q| q.q4)),
                format!("{:.1}", e.c1_vs_full),
                m.map_or_else(|| "-".into(), |m| format!("{:.3}", m.wad.mean)),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in rows {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

/// Runs all five rows into `out/<slug>/`, scores each and compares every
/// row's state labels against the Full System row.
pub fn ablate(
    trials: &[Trial],
    base: &RunConfig,
    knowledge: Option<Knowledge>,
    client: &dyn CompletionClient,
    out: &Path,
    created_at: &str,
) -> Result<AblationReport> {
    let mut runs = Vec::new();
    for row in AblationRow::ALL {
        let cfg = base.with_row(row);
        let summary = analyze(trials, &cfg, knowledge, client, &out.join(row.slug()), created_at)?;
        runs.push((row, summary));
    }
    let labels = |preds: &[super::PredictionRow]| -> Result<std::collections::BTreeMap<String, StateLabel>> {
        preds
            .iter()
            .map(|p| Ok((p.key(), p.pred.parse::<StateLabel>().map_err(Error::Config)?)))
            .collect()
    };
    let full = labels(&runs[0].1.predictions)?;
    let opts = EvaluateOptions {
        t3: base.t3_mode,
        lexicon: base.paths.lexicon.clone(),
        ..EvaluateOptions::default()
    };
    let mut entries = Vec::new();
    for (row, summary) in &runs {
        let metrics = match evaluate_run(&summary.dir, &opts) {
            Ok(m) => {
                write_summary(&summary.dir, &m)?;
                Some(m)
            }
            Err(Error::Eval(_)) => None,
            Err(e) => return Err(e),
        };
        entries.push(AblationEntry {
            row: *row,
            label: row.label().to_string(),
            switches: row.switches(),
            dir: row.slug().to_string(),
            succeeded: summary.manifest.succeeded,
            failed: summary.manifest.failed.len(),
            metrics,
            c1_vs_full: agreement(&labels(&summary.predictions)?, &full)?,
        });
    }
    let report = AblationReport { entries };
    write_json(&out.join("ablation.json"), &report)?;
    write_atomic(&out.join("ablation.txt"), report.to_table().as_bytes())?;
    Ok(report)
}
