//! Dual z-scores: population-referenced `z_trad` and within-subject `z_Δ`,
//! change-state ladder and sign-conflict flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, NormError, Result};
use crate::metric::Metric;
use crate::signal::{sample_sd, FeaturePanel};

/// Mean and spread for one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub sd: f64,
}

/// Population reference values keyed by metric name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PopulationStats {
    pub metrics: BTreeMap<Metric, MetricStats>,
}

impl PopulationStats {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let stats: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if let Some((m, _)) = stats.metrics.iter().find(|(_, s)| s.sd.is_nan() || s.sd <= 0.0 || !s.mean.is_finite()) {
            return Err(NormError::ZeroSigma(m.name().to_string()).into());
        }
        Ok(stats)
    }

    /// Mean and sample SD of every normalized metric over a cohort. Metrics
    /// with fewer than two values or zero spread are left out.
    pub fn from_cohort<'a>(panels: impl IntoIterator<Item = &'a FeaturePanel>) -> Self {
        let panels: Vec<&FeaturePanel> = panels.into_iter().collect();
        let mut metrics = BTreeMap::new();
        for m in Metric::NORMALIZED {
            let xs: Vec<f64> = panels.iter().filter_map(|p| m.value(p)).collect();
            if xs.len() < 2 {
                continue;
            }
            let sd = sample_sd(&xs);
            if sd > 0.0 {
                metrics.insert(m, MetricStats { mean: crate::signal::mean(&xs), sd });
            }
        }
        Self { metrics }
    }

    pub fn get(&self, m: Metric) -> Option<&MetricStats> {
        self.metrics.get(&m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    /// Every trial of the subject, including the current one.
    #[default]
    Retrospective,
    /// Only trials that precede the current one.
    Causal,
}

/// Per-metric subject statistics. `sd` is `None` below two trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineStat {
    pub mean: f64,
    pub sd: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineProfile {
    pub subject_id: String,
    pub mode: BaselineMode,
    pub trial_count: usize,
    pub metrics: BTreeMap<Metric, BaselineStat>,
}

impl BaselineProfile {
    pub fn get(&self, m: Metric) -> Option<&BaselineStat> {
        self.metrics.get(&m)
    }

    /// True when at least one metric has a usable spread.
    pub fn sigma_available(&self) -> bool {
        self.metrics.values().any(|s| s.sd.is_some())
    }
}

/// Builds a subject baseline from the given panels (already restricted to
/// the trials the mode allows). Zero panels is `InsufficientHistory`.
pub fn build_baseline(subject_id: &str, panels: &[&FeaturePanel], mode: BaselineMode) -> Result<BaselineProfile, NormError> {
    if panels.is_empty() {
        return Err(NormError::InsufficientHistory(subject_id.to_string()));
    }
    let mut metrics = BTreeMap::new();
    for m in Metric::NORMALIZED {
        let xs: Vec<f64> = panels.iter().filter_map(|p| m.value(p)).collect();
        if xs.is_empty() {
            continue;
        }
        let mean = crate::signal::mean(&xs);
        // identical trials leave round-off residue in the SD
        let sd = (xs.len() >= 2).then(|| sample_sd(&xs)).map(|s| if s <= 1e-12 * mean.abs().max(1.0) { 0.0 } else { s });
        metrics.insert(
            m,
            BaselineStat {
                mean,
                sd,
                n: xs.len(),
            },
        );
    }
    Ok(BaselineProfile {
        subject_id: subject_id.to_string(),
        mode,
        trial_count: panels.len(),
        metrics,
    })
}

/// Baseline for trial `index` of a subject's chronologically ordered panels.
pub fn baseline_for_trial(
    subject_id: &str,
    ordered: &[&FeaturePanel],
    index: usize,
    mode: BaselineMode,
) -> Result<BaselineProfile, NormError> {
    match mode {
        BaselineMode::Retrospective => build_baseline(subject_id, ordered, mode),
        BaselineMode::Causal => build_baseline(subject_id, &ordered[..index.min(ordered.len())], mode),
    }
}

/// Optional overrides for the delta distribution. Unset metrics use
/// μ_Δ = 0 and σ_Δ = the subject's baseline SD.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeltaStats {
    pub overrides: BTreeMap<Metric, MetricStats>,
}

impl DeltaStats {
    pub fn resolve(&self, m: Metric, baseline: &BaselineStat) -> (f64, Option<f64>) {
        match self.overrides.get(&m) {
            Some(s) => (s.mean, Some(s.sd)),
            None => (0.0, baseline.sd),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeState {
    Baseline,
    Mild,
    Moderate,
    Marked,
}

impl ChangeState {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeState::Baseline => "baseline",
            ChangeState::Mild => "mild",
            ChangeState::Moderate => "moderate",
            ChangeState::Marked => "marked",
        }
    }
}

pub fn traditional_z(x: f64, mu_pop: f64, sigma_pop: f64) -> Result<f64, NormError> {
    if sigma_pop.is_nan() || sigma_pop <= 0.0 {
        return Err(NormError::ZeroSigma("population".into()));
    }
    Ok((x - mu_pop) / sigma_pop)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta {
    pub delta: f64,
    pub delta_pct: Option<f64>,
    pub z_delta: f64,
}

/// Δx, Δ% and z_Δ = (Δx − μ_Δ)/σ_Δ. Δ% is absent when the baseline is zero.
pub fn delta_z(x_stim: f64, x_baseline: f64, mu_delta: f64, sigma_delta: f64) -> Result<Delta, NormError> {
    if sigma_delta.is_nan() || sigma_delta <= 0.0 {
        return Err(NormError::ZeroSigma("delta".into()));
    }
    let delta = x_stim - x_baseline;
    Ok(Delta {
        delta,
        delta_pct: percent_change(x_stim, x_baseline).ok(),
        z_delta: (delta - mu_delta) / sigma_delta,
    })
}

pub fn percent_change(x_stim: f64, x_baseline: f64) -> Result<f64, NormError> {
    if x_baseline == 0.0 {
        return Err(NormError::BaselineZero("baseline".into()));
    }
    Ok(100.0 * (x_stim - x_baseline) / x_baseline)
}

pub fn classify_state(z: f64) -> ChangeState {
    let a = z.abs();
    if a >= 2.0 {
        ChangeState::Marked
    } else if a >= 1.0 {
        ChangeState::Moderate
    } else if a >= 0.5 {
        ChangeState::Mild
    } else {
        ChangeState::Baseline
    }
}

/// Fallback ladder on |Δ%| when no z-score is available.
pub fn classify_pct(pct: f64, thresholds: &PctThresholds) -> ChangeState {
    let a = pct.abs();
    if a >= thresholds.marked {
        ChangeState::Marked
    } else if a >= thresholds.moderate {
        ChangeState::Moderate
    } else if a >= thresholds.mild {
        ChangeState::Mild
    } else {
        ChangeState::Baseline
    }
}

/// Sign conflict between the population and within-subject views. Zero
/// agrees with either sign.
pub fn detect_conflict(z_trad: f64, z_delta: f64) -> bool {
    z_trad * z_delta < 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PctThresholds {
    pub marked: f64,
    pub moderate: f64,
    pub mild: f64,
}

impl Default for PctThresholds {
    fn default() -> Self {
        Self {
            marked: 25.0,
            moderate: 15.0,
            mild: 7.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    pub baseline_mode: BaselineMode,
    pub pct_fallback: PctThresholds,
    /// Off under the "w/o ΔZ" ablation: only z_trad is computed and states
    /// come from the population ladder.
    pub delta_z: bool,
    pub delta_stats: DeltaStats,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            baseline_mode: BaselineMode::Retrospective,
            pct_fallback: PctThresholds::default(),
            delta_z: true,
            delta_stats: DeltaStats::default(),
        }
    }
}

/// Where a change state came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSource {
    DeltaZ,
    PercentFallback,
    Population,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMetric {
    pub metric: Metric,
    pub x_stim: f64,
    pub x_baseline: Option<f64>,
    pub delta: Option<f64>,
    pub delta_pct: Option<f64>,
    pub z_trad: Option<f64>,
    pub z_delta: Option<f64>,
    /// Step-6 evidence; identical to `z_delta` by construction.
    pub z_s6: Option<f64>,
    pub state: ChangeState,
    pub state_source: StateSource,
    pub conflict: bool,
    pub reduced_confidence: bool,
}

impl NormalizedMetric {
    /// Signed evidence used for direction: z_Δ, else Δ%, else z_trad when
    /// the state came from the population ladder.
    pub fn direction(&self) -> f64 {
        match self.state_source {
            StateSource::DeltaZ => self.z_delta.unwrap_or(0.0),
            StateSource::PercentFallback => self.delta_pct.unwrap_or(0.0),
            StateSource::Population => self.z_trad.unwrap_or(0.0),
            StateSource::Unavailable => 0.0,
        }
        .signum()
    }

    /// Non-baseline change pointing up.
    pub fn is_up(&self) -> bool {
        self.state != ChangeState::Baseline && self.direction() > 0.0
    }

    pub fn is_down(&self) -> bool {
        self.state != ChangeState::Baseline && self.direction() < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPanel {
    pub subject_id: String,
    pub trial_id: String,
    pub baseline_mode: BaselineMode,
    pub delta_z_enabled: bool,
    pub entries: Vec<NormalizedMetric>,
}

impl NormalizedPanel {
    pub fn get(&self, m: Metric) -> Option<&NormalizedMetric> {
        self.entries.iter().find(|e| e.metric == m)
    }

    pub fn any_reduced_confidence(&self) -> bool {
        self.entries.iter().any(|e| e.reduced_confidence)
    }
}

/// Normalizes every available metric of `panel`.
pub fn normalize(
    panel: &FeaturePanel,
    pop: &PopulationStats,
    baseline: Option<&BaselineProfile>,
    cfg: &NormConfig,
) -> NormalizedPanel {
    let mut entries = Vec::new();
    for m in Metric::NORMALIZED {
        let Some(x) = m.value(panel) else { continue };
        let z_trad = pop.get(m).and_then(|s| traditional_z(x, s.mean, s.sd).ok());
        let base = baseline.and_then(|b| b.get(m));
        let x_baseline = base.map(|b| b.mean);
        let delta = x_baseline.map(|b| x - b);
        let delta_pct = x_baseline.and_then(|b| percent_change(x, b).ok());

        let z_delta = if cfg.delta_z {
            base.and_then(|b| {
                let (mu, sigma) = cfg.delta_stats.resolve(m, b);
                sigma.and_then(|s| delta_z(x, b.mean, mu, s).ok()).map(|d| d.z_delta)
            })
        } else {
            None
        };

        let (state, state_source) = match (cfg.delta_z, z_delta, delta_pct, z_trad) {
            (true, Some(z), _, _) => (classify_state(z), StateSource::DeltaZ),
            (true, None, Some(p), _) => (classify_pct(p, &cfg.pct_fallback), StateSource::PercentFallback),
            (false, _, _, Some(z)) => (classify_state(z), StateSource::Population),
            _ => (ChangeState::Baseline, StateSource::Unavailable),
        };
        let conflict = matches!((z_trad, z_delta), (Some(a), Some(b)) if detect_conflict(a, b));

        entries.push(NormalizedMetric {
            metric: m,
            x_stim: x,
            x_baseline,
            delta,
            delta_pct: if cfg.delta_z { delta_pct } else { None },
            z_trad,
            z_delta,
            z_s6: z_delta,
            state,
            state_source,
            conflict,
            reduced_confidence: matches!(state_source, StateSource::PercentFallback | StateSource::Unavailable),
        });
    }
    NormalizedPanel {
        subject_id: panel.subject_id.clone(),
        trial_id: panel.trial_id.clone(),
        baseline_mode: cfg.baseline_mode,
        delta_z_enabled: cfg.delta_z,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::panel_with;
    use proptest::prelude::*;

    #[test]
    fn traditional_z_examples() {
        assert_eq!(traditional_z(40.0, 40.0, 10.0).unwrap(), 0.0);
        assert_eq!(traditional_z(50.0, 40.0, 10.0).unwrap(), 1.0);
        assert_eq!(traditional_z(65.0, 40.0, 10.0).unwrap(), 2.5);
        assert!(matches!(traditional_z(1.0, 0.0, 0.0), Err(NormError::ZeroSigma(_))));
    }

    #[test]
    fn delta_z_examples() {
        let d = delta_z(42.0, 40.0, 0.0, 4.0).unwrap();
        assert_eq!((d.delta, d.delta_pct, d.z_delta), (2.0, Some(5.0), 0.5));
        assert_eq!(delta_z(38.0, 40.0, 0.0, 4.0).unwrap().z_delta, -0.5);
        assert_eq!(delta_z(40.0, 40.0, 0.0, 4.0).unwrap().z_delta, 0.0);
        assert_eq!(delta_z(1.0, 0.0, 0.0, 4.0).unwrap().delta_pct, None);
        assert!(delta_z(1.0, 2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn baseline_mean_and_sample_sd() {
        let ps: Vec<FeaturePanel> = [30.0, 40.0, 50.0].iter().map(|&r| panel_with(r, 70.0)).collect();
        let refs: Vec<&FeaturePanel> = ps.iter().collect();
        let b = build_baseline("S1", &refs, BaselineMode::Retrospective).unwrap();
        let s = b.get(Metric::Rmssd).unwrap();
        assert_eq!((s.mean, s.sd, s.n), (40.0, Some(10.0), 3));
    }

    #[test]
    fn causal_history_rules() {
        let ps: Vec<FeaturePanel> = [30.0, 40.0, 50.0].iter().map(|&r| panel_with(r, 70.0)).collect();
        let refs: Vec<&FeaturePanel> = ps.iter().collect();
        assert!(matches!(
            baseline_for_trial("S1", &refs, 0, BaselineMode::Causal),
            Err(NormError::InsufficientHistory(_))
        ));
        let one = baseline_for_trial("S1", &refs, 1, BaselineMode::Causal).unwrap();
        assert_eq!(one.get(Metric::Rmssd).unwrap().sd, None);
        assert!(!one.sigma_available());
        let two = baseline_for_trial("S1", &refs, 2, BaselineMode::Causal).unwrap();
        assert_eq!(two.get(Metric::Rmssd).unwrap().mean, 35.0);
    }

    #[test]
    fn state_ladder_boundaries() {
        assert_eq!(classify_state(2.0), ChangeState::Marked);
        assert_eq!(classify_state(-1.5), ChangeState::Moderate);
        assert_eq!(classify_state(0.5), ChangeState::Mild);
        assert_eq!(classify_state(0.49), ChangeState::Baseline);
        assert_eq!(classify_state(1.0), ChangeState::Moderate);
    }

    #[test]
    fn conflict_examples() {
        assert!(detect_conflict(0.5, -0.3));
        assert!(!detect_conflict(0.5, 0.1));
        assert!(!detect_conflict(0.0, -2.0));
    }

    #[test]
    fn identical_trials_fall_back_to_percent() {
        let ps: Vec<FeaturePanel> = (0..3).map(|_| panel_with(40.0, 70.0)).collect();
        let refs: Vec<&FeaturePanel> = ps.iter().collect();
        let b = build_baseline("S1", &refs, BaselineMode::Retrospective).unwrap();
        let n = normalize(&panel_with(52.0, 70.0), &PopulationStats::default(), Some(&b), &NormConfig::default());
        let e = n.get(Metric::Rmssd).unwrap();
        assert_eq!(e.z_delta, None);
        assert_eq!(e.delta_pct, Some(30.0));
        assert_eq!(e.state, ChangeState::Marked);
        assert_eq!(e.state_source, StateSource::PercentFallback);
        assert!(e.reduced_confidence);
    }

    #[test]
    fn normalize_without_delta_uses_population() {
        let ps: Vec<FeaturePanel> = [30.0, 40.0, 50.0].iter().map(|&r| panel_with(r, 70.0)).collect();
        let refs: Vec<&FeaturePanel> = ps.iter().collect();
        let b = build_baseline("S1", &refs, BaselineMode::Retrospective).unwrap();
        let pop = PopulationStats::from_cohort(&ps);
        let cfg = NormConfig {
            delta_z: false,
            ..NormConfig::default()
        };
        let n = normalize(&ps[2], &pop, Some(&b), &cfg);
        let e = n.get(Metric::Rmssd).unwrap();
        assert_eq!(e.z_delta, None);
        assert_eq!(e.delta, Some(10.0));
        assert_eq!(e.delta_pct, None);
        assert_eq!(e.z_trad, Some(1.0));
        assert_eq!(e.state_source, StateSource::Population);
        assert_eq!(e.state, ChangeState::Moderate);
    }

    #[test]
    fn population_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.json");
        std::fs::write(&path, r#"{"RMSSD":{"mean":40,"sd":10},"LF/HF":{"mean":1.5,"sd":0.8}}"#).unwrap();
        let p = PopulationStats::from_json_file(&path).unwrap();
        assert_eq!(p.get(Metric::LfHf).unwrap().sd, 0.8);
        std::fs::write(&path, r#"{"RMSSD":{"mean":40,"sd":0}}"#).unwrap();
        assert!(PopulationStats::from_json_file(&path).is_err());
    }

    proptest! {
        #[test]
        fn delta_sign_matches_z_sign(x in -1e3f64..1e3, b in -1e3f64..1e3, s in 1e-3f64..1e3) {
            let d = delta_z(x, b, 0.0, s).unwrap();
            if d.delta != 0.0 {
                prop_assert_eq!(d.delta.signum(), d.z_delta.signum());
            }
        }

        #[test]
        fn ladder_and_conflict_are_symmetric(a in -10f64..10.0, b in -10f64..10.0) {
            prop_assert_eq!(classify_state(a), classify_state(-a));
            prop_assert_eq!(detect_conflict(a, b), detect_conflict(b, a));
        }

        #[test]
        fn retrospective_baseline_is_permutation_invariant(v in prop::collection::vec(10f64..100.0, 2..8), rot in 0usize..8) {
            let ps: Vec<FeaturePanel> = v.iter().map(|&r| panel_with(r, 70.0)).collect();
            let mut rotated = ps.clone();
            rotated.rotate_left(rot % ps.len());
            let a = build_baseline("S", &ps.iter().collect::<Vec<_>>(), BaselineMode::Retrospective).unwrap();
            let b = build_baseline("S", &rotated.iter().collect::<Vec<_>>(), BaselineMode::Retrospective).unwrap();
            let (sa, sb) = (a.get(Metric::Rmssd).unwrap(), b.get(Metric::Rmssd).unwrap());
            prop_assert!((sa.mean - sb.mean).abs() < 1e-9);
            prop_assert!((sa.sd.unwrap() - sb.sd.unwrap()).abs() < 1e-9);
        }

        #[test]
        fn z_s6_always_equals_z_delta(r in 10f64..100.0) {
            let ps: Vec<FeaturePanel> = [30.0, 40.0, 50.0].iter().map(|&x| panel_with(x, 70.0)).collect();
            let b = build_baseline("S1", &ps.iter().collect::<Vec<_>>(), BaselineMode::Retrospective).unwrap();
            let n = normalize(&panel_with(r, 72.0), &PopulationStats::from_cohort(&ps), Some(&b), &NormConfig::default());
            for e in &n.entries {
                prop_assert_eq!(e.z_s6, e.z_delta);
            }
        }
    }
}
