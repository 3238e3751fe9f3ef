//! Deterministic guardrail rules: RSA severity, data-length and ULF checks,
//! quality gating and contradiction patterns that inject warning queries.

use serde::{Deserialize, Serialize};

use crate::metric::Metric;
use crate::normalization::NormalizedPanel;
use crate::signal::FeaturePanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RsaLevel {
    Severe,
    Moderate,
    Mild,
    None,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsaSeverity {
    pub level: RsaLevel,
    pub delta_hz: Option<f64>,
    pub f_resp: Option<f64>,
    pub f_hf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityGate {
    Pass,
    Warn,
    Gate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContradictionPattern {
    Coactivation,
    LfhfUnreliable,
    DfaNotAutonomic,
    GeometryVsComplexity,
    ExtremeRatio,
}

impl ContradictionPattern {
    pub const ALL: [ContradictionPattern; 5] = [
        ContradictionPattern::Coactivation,
        ContradictionPattern::LfhfUnreliable,
        ContradictionPattern::DfaNotAutonomic,
        ContradictionPattern::GeometryVsComplexity,
        ContradictionPattern::ExtremeRatio,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ContradictionPattern::Coactivation => "coactivation",
            ContradictionPattern::LfhfUnreliable => "lfhf_unreliable",
            ContradictionPattern::DfaNotAutonomic => "dfa_not_autonomic",
            ContradictionPattern::GeometryVsComplexity => "geometry_vs_complexity",
            ContradictionPattern::ExtremeRatio => "extreme_ratio",
        }
    }

    /// Warning query topic injected into retrieval.
    pub fn query_topic(self) -> &'static str {
        match self {
            ContradictionPattern::Coactivation => "sympathetic-parasympathetic coactivation",
            ContradictionPattern::LfhfUnreliable => "LF/HF unreliability, respiratory confound",
            ContradictionPattern::DfaNotAutonomic => "DFA not a direct autonomic measure",
            ContradictionPattern::GeometryVsComplexity => "geometric vs. complexity construct difference",
            ContradictionPattern::ExtremeRatio => "extreme LF/HF ratio, respiratory artifact",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionFlag {
    pub pattern: ContradictionPattern,
    /// Triggering metrics rendered as "RMSSD↑ (moderate)".
    pub evidence: Vec<String>,
    pub injected_query_topic: String,
}

/// A prompt directive; `step` is `None` when it applies to every step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub step: Option<u8>,
    pub text: String,
}

impl Directive {
    fn at(step: u8, text: String) -> Self {
        Self { step: Some(step), text }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardrailSet {
    pub enabled: bool,
    pub rsa: RsaSeverity,
    pub nonlinear_prohibited: bool,
    pub n_poincare: usize,
    pub ulf_warning: bool,
    pub ulf_ratio: Option<f64>,
    pub quality_gate: QualityGate,
    pub contradictions: Vec<ContradictionFlag>,
    pub directives: Vec<Directive>,
}

impl GuardrailSet {
    pub fn directives_for(&self, step: u8) -> impl Iterator<Item = &Directive> {
        self.directives.iter().filter(move |d| d.step.is_none_or(|s| s == step))
    }

    /// Gated trials may not report High confidence.
    pub fn caps_confidence(&self) -> bool {
        self.enabled && self.quality_gate == QualityGate::Gate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuardrailConfig {
    /// Off under the "w/o Guardrails" ablation: decisions are still computed
    /// and recorded, but no directives reach the prompts.
    pub enabled: bool,
    pub rsa_severe_hz: f64,
    pub rsa_moderate_hz: f64,
    pub rsa_mild_hz: f64,
    pub min_poincare_points: usize,
    pub ulf_max_ratio: f64,
    pub max_artifact_rate: f64,
    pub min_valid_rr_ratio: f64,
    pub lfhf_high: f64,
    pub lfhf_low: f64,
}

impl Default for GuardrailConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rsa_severe_hz: 0.05,
            rsa_moderate_hz: 0.08,
            rsa_mild_hz: 0.12,
            min_poincare_points: 100,
            ulf_max_ratio: 0.5,
            max_artifact_rate: 0.2,
            min_valid_rr_ratio: 0.8,
            lfhf_high: 3.0,
            lfhf_low: 0.3,
        }
    }
}

/// Rounds away binary noise so that e.g. 0.30 − 0.25 grades as exactly 0.05.
fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

pub fn grade_rsa_delta(delta_hz: f64, cfg: &GuardrailConfig) -> RsaLevel {
    let d = snap(delta_hz.abs());
    if d < cfg.rsa_severe_hz {
        RsaLevel::Severe
    } else if d < cfg.rsa_moderate_hz {
        RsaLevel::Moderate
    } else if d < cfg.rsa_mild_hz {
        RsaLevel::Mild
    } else {
        RsaLevel::None
    }
}

pub fn grade_rsa(f_resp: Option<f64>, f_hf: f64, cfg: &GuardrailConfig) -> RsaSeverity {
    match f_resp {
        Some(fr) => {
            let delta = snap((fr - f_hf).abs());
            RsaSeverity {
                level: grade_rsa_delta(delta, cfg),
                delta_hz: Some(delta),
                f_resp: Some(fr),
                f_hf,
            }
        }
        None => RsaSeverity {
            level: RsaLevel::Unknown,
            delta_hz: None,
            f_resp: None,
            f_hf,
        },
    }
}

/// Step-3 directives for an RSA grade.
pub fn rsa_directives(sev: &RsaSeverity) -> Vec<String> {
    let delta = sev.delta_hz.unwrap_or(0.0);
    match sev.level {
        RsaLevel::Severe => vec![
            format!(
                "RSA severe (|f_resp - f_HF| = {delta:.3} Hz < 0.05 Hz): do not interpret high HF power as strong parasympathetic activity."
            ),
            "Prohibit using LF/HF ratio for sympathovagal balance assessment.".to_string(),
            "Redirect reasoning to time-domain metrics (RMSSD, SDNN) as primary evidence.".to_string(),
        ],
        RsaLevel::Moderate => vec![format!(
            "Caution: RSA moderate (|f_resp - f_HF| = {delta:.3} Hz). Use guarded interpretation of HF power and LF/HF and explicitly acknowledge respiratory influence."
        )],
        RsaLevel::Mild => vec![format!(
            "Note: RSA mild (|f_resp - f_HF| = {delta:.3} Hz); respiration sits near the HF band but frequency metrics remain usable."
        )],
        RsaLevel::None => Vec::new(),
        RsaLevel::Unknown => vec![
            "Data limitation: no respiration signal, so RSA contamination of HF power cannot be assessed.".to_string(),
        ],
    }
}

pub fn check_nonlinear(n_poincare: usize, cfg: &GuardrailConfig) -> bool {
    n_poincare < cfg.min_poincare_points
}

pub fn check_ulf(ulf_ratio: f64, cfg: &GuardrailConfig) -> bool {
    ulf_ratio > cfg.ulf_max_ratio
}

pub fn gate_quality(artifact_rate: f64, valid_rr_ratio: f64, cfg: &GuardrailConfig) -> QualityGate {
    if artifact_rate > cfg.max_artifact_rate {
        QualityGate::Gate
    } else if valid_rr_ratio < cfg.min_valid_rr_ratio {
        QualityGate::Warn
    } else {
        QualityGate::Pass
    }
}

/// Evaluates the contradiction rows in table order. Arrows mean a
/// non-baseline change state with the matching sign.
pub fn detect_contradictions(
    panel: &NormalizedPanel,
    features: &FeaturePanel,
    cfg: &GuardrailConfig,
) -> Vec<ContradictionFlag> {
    let up = |m: Metric| panel.get(m).is_some_and(|e| e.is_up());
    let down = |m: Metric| panel.get(m).is_some_and(|e| e.is_down());
    let tag = |m: Metric, arrow: &str| {
        let state = panel.get(m).map(|e| e.state.as_str()).unwrap_or("n/a");
        format!("{}{arrow} ({state})", m.name())
    };

    let mut out = Vec::new();
    for pattern in ContradictionPattern::ALL {
        let evidence = match pattern {
            ContradictionPattern::Coactivation => (up(Metric::Rmssd) && up(Metric::LfHf))
                .then(|| vec![tag(Metric::Rmssd, "↑"), tag(Metric::LfHf, "↑")]),
            ContradictionPattern::LfhfUnreliable => (up(Metric::MeanHr) && down(Metric::SampEn) && down(Metric::LfHf))
                .then(|| vec![tag(Metric::MeanHr, "↑"), tag(Metric::SampEn, "↓"), tag(Metric::LfHf, "↓")]),
            ContradictionPattern::DfaNotAutonomic => (up(Metric::DfaAlpha) && down(Metric::Rmssd))
                .then(|| vec![tag(Metric::DfaAlpha, "↑"), tag(Metric::Rmssd, "↓")]),
            ContradictionPattern::GeometryVsComplexity => (down(Metric::Sd1Sd2) && down(Metric::SampEn))
                .then(|| vec![tag(Metric::Sd1Sd2, "↓"), tag(Metric::SampEn, "↓")]),
            ContradictionPattern::ExtremeRatio => features
                .freq
                .as_ref()
                .map(|f| f.lf_hf)
                .filter(|r| r.is_finite() && (*r > cfg.lfhf_high || *r < cfg.lfhf_low))
                .map(|r| vec![format!("LF/HF = {r:.2}")]),
        };
        if let Some(evidence) = evidence {
            out.push(ContradictionFlag {
                pattern,
                evidence,
                injected_query_topic: pattern.query_topic().to_string(),
            });
        }
    }
    out
}

/// Runs every rule and assembles the directive list.
pub fn evaluate(features: &FeaturePanel, panel: &NormalizedPanel, cfg: &GuardrailConfig) -> GuardrailSet {
    let f_hf = features.freq.as_ref().map_or(0.0, |f| f.f_hf);
    let rsa = match &features.freq {
        Some(_) => grade_rsa(features.f_resp, f_hf, cfg),
        None => grade_rsa(None, f_hf, cfg),
    };
    let n_poincare = features.poincare.n_points;
    let nonlinear_prohibited = check_nonlinear(n_poincare, cfg);
    let ulf_ratio = features.freq.as_ref().map(|f| f.ulf_ratio);
    let ulf_warning = ulf_ratio.is_some_and(|r| check_ulf(r, cfg));
    let q = &features.quality;
    let quality_gate = gate_quality(q.artifact_rate, q.valid_rr_ratio, cfg);
    let contradictions = detect_contradictions(panel, features, cfg);

    let mut directives = Vec::new();
    if cfg.enabled {
        match quality_gate {
            QualityGate::Gate => directives.push(Directive {
                step: None,
                text: format!(
                    "Quality warning: artifact rate {:.3} exceeds {}. Treat conclusions as provisional; confidence may not exceed Medium.",
                    q.artifact_rate, cfg.max_artifact_rate
                ),
            }),
            QualityGate::Warn => directives.push(Directive {
                step: None,
                text: format!(
                    "Quality warning: valid RR ratio {:.3} is below {}. Interpret all metrics with caution.",
                    q.valid_rr_ratio, cfg.min_valid_rr_ratio
                ),
            }),
            QualityGate::Pass => {}
        }
        directives.extend(rsa_directives(&rsa).into_iter().map(|t| Directive::at(3, t)));
        if ulf_warning {
            directives.push(Directive::at(
                3,
                format!(
                    "Warning: ULF ratio {:.3} exceeds {}; frequency-domain metrics are unreliable for this trial.",
                    ulf_ratio.unwrap_or(0.0),
                    cfg.ulf_max_ratio
                ),
            ));
        }
        if nonlinear_prohibited {
            directives.push(Directive::at(
                4,
                format!(
                    "N_poincare = {n_poincare} < {}: do not use SampEn or DFA; rely on time-domain features only.",
                    cfg.min_poincare_points
                ),
            ));
        }
    }

    GuardrailSet {
        enabled: cfg.enabled,
        rsa,
        nonlinear_prohibited,
        n_poincare,
        ulf_warning,
        ulf_ratio,
        quality_gate,
        contradictions,
        directives,
    }
}
