use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CompletionRequest, SamplingParams, StepReport};
use crate::guardrails::{GuardrailSet, RsaLevel};
use crate::knowledge::ScoredPassage;
use crate::metric::Metric;
use crate::normalization::{NormalizedMetric, NormalizedPanel};
use crate::signal::FeaturePanel;

pub const HIERARCHY_REMINDER: &str = "Decision hierarchy: within-subject Z-scores take precedence over complexity metrics, which in turn take precedence over absolute values and, lastly, over literature norms.";

pub const REGENERATION_INSTRUCTION: &str = "Your previous answer's rationale contradicted its State line. Decide the arousal level from the rationale you give, then write a State line that agrees with it.";

pub fn step_name(step: u8) -> &'static str {
    match step {
        1 => "Signal Quality",
        2 => "Time-Domain",
        3 => "Frequency-Domain + RSA Guardrails",
        4 => "Nonlinear + Data Length Guardrails",
        5 => "Baseline Delta",
        6 => "Within-Subject Profile",
        7 => "EEG Integration",
        8 => "Integration and Output",
        _ => "Unknown",
    }
}

fn step_task(step: u8) -> &'static str {
    match step {
        1 => "Grade signal quality from the artifact rate and valid RR ratio and list recommendations for downstream steps.",
        2 => "Assess vagal tone and arousal from the time-domain metrics and their Z-scores.",
        3 => "Interpret the power spectrum and LF/HF using the quantitative spectral features and report respiratory warnings.",
        4 => "Interpret SampEn, DFA alpha and the Poincaré geometry and report stability warnings.",
        5 => "Describe the magnitude and direction of change against the subject's own baseline.",
        6 => "Place this trial in the subject's longitudinal profile.",
        7 => "Integrate the EEG spectral features with the cardiac findings.",
        _ => "Synthesize all prior steps and retrieved evidence into the final structured report.",
    }
}

/// Spectral power features of an optional EEG channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EegFeatures {
    pub alpha_power: f64,
    pub beta_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub sampling: SamplingParams,
    /// Ask the model to cite passages with `[RAG: file, p.N]` markers.
    pub citation_markers: bool,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            sampling: SamplingParams::default(),
            citation_markers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("incomplete context for step {step}: {reason}")]
pub struct IncompleteContext {
    pub step: u8,
    pub reason: String,
}

/// Everything one step prompt is built from.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub step: u8,
    pub features: &'a FeaturePanel,
    pub panel: &'a NormalizedPanel,
    pub guardrails: &'a GuardrailSet,
    pub passages: &'a [ScoredPassage],
    /// Reports of steps 1–7; read by Step 8 only.
    pub prior: &'a [StepReport],
    pub conflicts: &'a [String],
    pub eeg: Option<&'a EegFeatures>,
}

fn signed(z: Option<f64>) -> String {
    z.map_or_else(|| "n/a".to_string(), |z| format!("{z:+.2}"))
}

fn value(m: Metric, x: f64) -> String {
    match m.unit() {
        "" => format!("{x:.3}"),
        "Hz" => format!("{x:.3} Hz"),
        u => format!("{x:.2} {u}"),
    }
}

fn arrow(e: &NormalizedMetric) -> &'static str {
    if e.is_up() {
        " ↑"
    } else if e.is_down() {
        " ↓"
    } else {
        ""
    }
}

/// One line per metric: value, z_trad and, when enabled, z_Δ with its state.
fn metric_lines(out: &mut String, panel: &NormalizedPanel, metrics: &[Metric]) {
    for &m in metrics {
        let Some(e) = panel.get(m) else {
            let _ = writeln!(out, "- {}: unavailable", m.name());
            continue;
        };
        let _ = write!(out, "- {}: {} | z_trad = {}", m.name(), value(m, e.x_stim), signed(e.z_trad));
        if panel.delta_z_enabled {
            let _ = write!(out, " | z_Δ = {} ({}{})", signed(e.z_delta), e.state.as_str(), arrow(e));
        }
        out.push('\n');
    }
}

const TIME_METRICS: [Metric; 7] = [
    Metric::MeanRr,
    Metric::Sdnn,
    Metric::MeanHr,
    Metric::Sdhr,
    Metric::Rmssd,
    Metric::Pnn50,
    Metric::SdnnIndex,
];
const FREQ_METRICS: [Metric; 3] = [Metric::LfRatio, Metric::HfRatio, Metric::LfHf];
const NONLINEAR_METRICS: [Metric; 5] = [Metric::Sd1, Metric::Sd2, Metric::Sd1Sd2, Metric::SampEn, Metric::DfaAlpha];
/// Metrics summarized for Step 8.
pub const KEY_METRICS: [Metric; 7] = [
    Metric::Rmssd,
    Metric::Sdnn,
    Metric::Pnn50,
    Metric::MeanHr,
    Metric::LfHf,
    Metric::SampEn,
    Metric::DfaAlpha,
];

fn rsa_line(g: &GuardrailSet) -> String {
    let level = match g.rsa.level {
        RsaLevel::Severe => "severe",
        RsaLevel::Moderate => "moderate",
        RsaLevel::Mild => "mild",
        RsaLevel::None => "none",
        RsaLevel::Unknown => "unknown",
    };
    match (g.rsa.f_resp, g.rsa.delta_hz) {
        (Some(fr), Some(d)) => format!(
            "RSA severity: {level} (f_resp = {fr:.3} Hz, f_HF = {:.3} Hz, |f_resp - f_HF| = {d:.3} Hz)",
            g.rsa.f_hf
        ),
        _ => format!("RSA severity: {level} (no respiration signal)"),
    }
}

fn user_data(ctx: &StepContext) -> String {
    let f = ctx.features;
    let p = ctx.panel;
    let mut out = format!("Subject {} / trial {}\n", f.subject_id, f.trial_id);
    match ctx.step {
        1 => {
            let q = &f.quality;
            let _ = writeln!(out, "- artifact rate: {:.3}", q.artifact_rate);
            let _ = writeln!(out, "- valid RR ratio: {:.3}", q.valid_rr_ratio);
            let _ = writeln!(out, "- spectral estimate unreliable: {}", q.spectral_unreliable);
            let _ = writeln!(out, "- nonlinear estimate unstable: {}", q.nonlinear_unstable);
            let _ = writeln!(out, "- quality gate: {:?}", ctx.guardrails.quality_gate);
        }
        2 => metric_lines(&mut out, p, &TIME_METRICS),
        3 => {
            metric_lines(&mut out, p, &FREQ_METRICS);
            match &f.freq {
                Some(fr) => {
                    let b = &fr.band_powers;
                    let _ = writeln!(out, "- ULF ratio: {:.3}", fr.ulf_ratio);
                    let _ = writeln!(
                        out,
                        "- band powers: ULF {:.1} ms², LF {:.1} ms², HF {:.1} ms², total {:.1} ms²",
                        b.ulf, b.lf, b.hf, b.total
                    );
                    let _ = writeln!(out, "- peaks: LF {:.3} Hz, HF {:.3} Hz", fr.peak_lf, fr.peak_hf);
                }
                None => out.push_str("- spectrum unavailable for this trial\n"),
            }
            let _ = writeln!(out, "{}", rsa_line(ctx.guardrails));
        }
        4 => {
            metric_lines(&mut out, p, &NONLINEAR_METRICS);
            let _ = writeln!(out, "- N_poincare: {}", ctx.guardrails.n_poincare);
            let _ = writeln!(out, "- nonlinear_prohibited: {}", ctx.guardrails.nonlinear_prohibited);
        }
        5 => {
            for e in &p.entries {
                if p.delta_z_enabled {
                    let _ = writeln!(
                        out,
                        "- {}: baseline {} -> {} | Δ = {} | Δ% = {} | z_Δ = {} ({}{})",
                        e.metric.name(),
                        e.x_baseline.map_or("n/a".into(), |b| value(e.metric, b)),
                        value(e.metric, e.x_stim),
                        signed(e.delta),
                        e.delta_pct.map_or("n/a".into(), |d| format!("{d:+.1}%")),
                        signed(e.z_delta),
                        e.state.as_str(),
                        arrow(e)
                    );
                } else {
                    let _ = writeln!(
                        out,
                        "- {}: baseline {} -> {} | Δ = {} | z_trad = {}",
                        e.metric.name(),
                        e.x_baseline.map_or("n/a".into(), |b| value(e.metric, b)),
                        value(e.metric, e.x_stim),
                        signed(e.delta),
                        signed(e.z_trad)
                    );
                }
            }
        }
        6 => {
            let _ = writeln!(out, "Baseline mode: {:?}", p.baseline_mode);
            for e in &p.entries {
                if p.delta_z_enabled {
                    let _ = writeln!(out, "- {}: z_S6 = {} ({}{})", e.metric.name(), signed(e.z_s6), e.state.as_str(), arrow(e));
                } else {
                    let _ = writeln!(out, "- {}: z_trad = {}", e.metric.name(), signed(e.z_trad));
                }
            }
        }
        7 => {
            if let Some(eeg) = ctx.eeg {
                let _ = writeln!(out, "- EEG alpha power: {:.3}", eeg.alpha_power);
                let _ = writeln!(out, "- EEG beta power: {:.3}", eeg.beta_power);
            }
        }
        _ => {
            out.push_str("Quantitative summary:\n");
            metric_lines(&mut out, p, &KEY_METRICS);
            out.push_str("\nStep reports:\n");
            for r in ctx.prior {
                let body = match (&r.response, r.skipped) {
                    (_, true) => "[skipped: no EEG channel]".to_string(),
                    (Some(t), _) => t.trim().to_string(),
                    (None, _) => "[no output]".to_string(),
                };
                let _ = writeln!(out, "Step {} ({}):\n{}\n", r.step, r.name, body);
            }
            if !ctx.conflicts.is_empty() {
                out.push_str("Conflict flags:\n");
                for c in ctx.conflicts {
                    let _ = writeln!(out, "- {c}");
                }
            }
        }
    }
    if !ctx.passages.is_empty() {
        out.push_str("\nRetrieved evidence:\n");
        for sp in ctx.passages {
            let _ = writeln!(out, "{} (s_adj = {:.3})\n{}\n", sp.chunk.citation(), sp.s_adj, sp.chunk.text.trim());
        }
    }
    out
}

fn system_prompt(ctx: &StepContext, cfg: &PromptConfig) -> String {
    let mut out = format!(
        "You are an HRV interpretation assistant working through a stepwise analysis.\nStep {}: {}.\nTask: {}\n",
        ctx.step,
        step_name(ctx.step),
        step_task(ctx.step)
    );
    let directives: Vec<&str> = if ctx.step == 8 {
        ctx.guardrails.directives.iter().map(|d| d.text.as_str()).collect()
    } else {
        ctx.guardrails.directives_for(ctx.step).map(|d| d.text.as_str()).collect()
    };
    if !directives.is_empty() {
        out.push_str("\nGuardrail directives:\n");
        for d in directives {
            let _ = writeln!(out, "- {d}");
        }
    }
    if ctx.step == 6 && ctx.panel.delta_z_enabled {
        out.push_str("\nUse z_S6 (the within-subject z_Δ) as the primary evidence.\n");
    }
    if ctx.step == 8 {
        if ctx.guardrails.enabled && !ctx.guardrails.contradictions.is_empty() {
            out.push_str("\nContradiction warnings:\n");
            for c in &ctx.guardrails.contradictions {
                let _ = writeln!(out, "- {}: {}", c.injected_query_topic, c.evidence.join(", "));
            }
        }
        let _ = writeln!(out, "\n{HIERARCHY_REMINDER}");
        let cite = if cfg.citation_markers {
            "cite passages with their [RAG: file, p.N] markers"
        } else {
            "cite passages by file and page"
        };
        let _ = write!(
            out,
            "\nRespond using exactly this template:\nState: <HVHA|HVLA|LVHA|LVLA>\nConfidence: <High|Medium|Low>\nRationale: <key evidence; write z-values as \"METRIC (z = value)\" and {cite}>\nLimitations: <explicit notes on input limitations>\n"
        );
    }
    out
}

/// Deterministic template instantiation for one step.
pub fn assemble_prompt(ctx: &StepContext, cfg: &PromptConfig) -> Result<CompletionRequest, IncompleteContext> {
    let fail = |reason: &str| IncompleteContext {
        step: ctx.step,
        reason: reason.to_string(),
    };
    match ctx.step {
        1..=6 => {}
        7 if ctx.eeg.is_none() => return Err(fail("no EEG features")),
        7 => {}
        8 if ctx.prior.len() != 7 => return Err(fail("Step 8 needs the reports of steps 1-7")),
        8 => {}
        _ => return Err(fail("step must be in 1..=8")),
    }
    Ok(CompletionRequest::new(ctx.step, system_prompt(ctx, cfg), user_data(ctx), &cfg.sampling))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guardrails::{evaluate, GuardrailConfig};
    use crate::normalization::{build_baseline, normalize, BaselineMode, NormConfig, PopulationStats};
    use crate::test_support::panel_with;

    struct Fixture {
        features: FeaturePanel,
        panel: NormalizedPanel,
        guardrails: GuardrailSet,
    }

    fn fixture(f_resp: Option<f64>, n_points: usize, norm: &NormConfig, gcfg: &GuardrailConfig) -> Fixture {
        let ps: Vec<_> = [30.0, 40.0, 50.0].iter().map(|&r| panel_with(r, 70.0)).collect();
        let pop = PopulationStats::from_cohort(&ps);
        let b = build_baseline("S1", &ps.iter().collect::<Vec<_>>(), BaselineMode::Retrospective).unwrap();
        let mut features = panel_with(60.0, 70.0);
        features.f_resp = f_resp;
        features.poincare.n_points = n_points;
        let panel = normalize(&features, &pop, Some(&b), norm);
        let guardrails = evaluate(&features, &panel, gcfg);
        Fixture {
            features,
            panel,
            guardrails,
        }
    }

    fn ctx(f: &Fixture, step: u8) -> StepContext<'_> {
        StepContext {
            step,
            features: &f.features,
            panel: &f.panel,
            guardrails: &f.guardrails,
            passages: &[],
            prior: &[],
            conflicts: &[],
            eeg: None,
        }
    }

    #[test]
    fn severe_rsa_rewrites_step_three() {
        let f = fixture(Some(0.26), 120, &NormConfig::default(), &GuardrailConfig::default());
        let req = assemble_prompt(&ctx(&f, 3), &PromptConfig::default()).unwrap();
        assert!(req.system.contains("Prohibit using LF/HF ratio for sympathovagal balance assessment."));
        assert!(req.user.contains("RSA severity: severe"));
        let step2 = assemble_prompt(&ctx(&f, 2), &PromptConfig::default()).unwrap();
        assert!(!step2.system.contains("Prohibit using LF/HF"));
    }

    #[test]
    fn short_series_restricts_step_four() {
        let f = fixture(None, 80, &NormConfig::default(), &GuardrailConfig::default());
        let req = assemble_prompt(&ctx(&f, 4), &PromptConfig::default()).unwrap();
        assert!(req.system.contains("rely on time-domain features only"));
        assert!(req.user.contains("nonlinear_prohibited: true"));
        let ok = fixture(None, 100, &NormConfig::default(), &GuardrailConfig::default());
        let req = assemble_prompt(&ctx(&ok, 4), &PromptConfig::default()).unwrap();
        assert!(req.user.contains("nonlinear_prohibited: false"));
        assert!(!req.system.contains("rely on time-domain"));
    }

    #[test]
    fn prompts_are_deterministic() {
        let f = fixture(Some(0.3), 120, &NormConfig::default(), &GuardrailConfig::default());
        for step in 1..=6 {
            let a = assemble_prompt(&ctx(&f, step), &PromptConfig::default()).unwrap();
            let b = assemble_prompt(&ctx(&f, step), &PromptConfig::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn no_delta_z_means_population_scores_only() {
        let norm = NormConfig {
            delta_z: false,
            ..NormConfig::default()
        };
        let f = fixture(None, 120, &norm, &GuardrailConfig::default());
        for step in [2, 5, 6] {
            let req = assemble_prompt(&ctx(&f, step), &PromptConfig::default()).unwrap();
            assert!(!req.user.contains("z_Δ") && !req.user.contains("z_S6"), "step {step}");
            assert!(req.user.contains("z_trad"));
        }
        let req = assemble_prompt(&ctx(&f, 5), &PromptConfig::default()).unwrap();
        assert!(req.user.contains("Δ = +20.00"));
    }

    #[test]
    fn disabled_guardrails_emit_no_directives() {
        let g = GuardrailConfig {
            enabled: false,
            ..GuardrailConfig::default()
        };
        let f = fixture(Some(0.26), 80, &NormConfig::default(), &g);
        for step in 1..=6 {
            let req = assemble_prompt(&ctx(&f, step), &PromptConfig::default()).unwrap();
            assert!(!req.system.contains("Guardrail directives"), "step {step}");
        }
    }

    #[test]
    fn step_checks() {
        let f = fixture(None, 120, &NormConfig::default(), &GuardrailConfig::default());
        assert!(assemble_prompt(&ctx(&f, 7), &PromptConfig::default()).is_err());
        assert!(assemble_prompt(&ctx(&f, 8), &PromptConfig::default()).is_err());
        assert!(assemble_prompt(&ctx(&f, 9), &PromptConfig::default()).is_err());
    }
}
