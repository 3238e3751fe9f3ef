//! RR-interval preprocessing and the quantitative feature panel.
//!
//! The panel bundles time-domain, frequency-domain and nonlinear HRV metrics
//! with the plot-independent features (Poincaré point statistics, PSD band
//! powers and peaks) that replace rendered images downstream.

mod detrend;
mod nonlinear;
mod preprocess;
mod respiration;
mod spectral;
mod spline;
mod time_domain;
pub mod trial;

use serde::{Deserialize, Serialize};

use crate::error::SignalError;

pub use detrend::smoothness_priors_detrend;
pub use nonlinear::{
    dfa_alpha, dfa_fluctuations, nonlinear, poincare, sample_entropy, sample_entropy_counts,
    NonlinearFeatures, PoincareFeatures,
};
pub use preprocess::preprocess;
pub use respiration::{respiratory_frequency, RespSignal};
pub use spectral::{frequency_domain, welch_psd, BandPowers, FrequencyFeatures, Psd};
pub use spline::CubicSpline;
pub use time_domain::{sample_sd, time_domain, TimeDomain};

/// Raw inter-beat intervals for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrSeries {
    pub subject_id: String,
    pub trial_id: String,
    pub intervals_ms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<String>,
}

impl RrSeries {
    /// Validates that every interval is finite and positive and that there are at least two.
    pub fn new(
        subject_id: impl Into<String>,
        trial_id: impl Into<String>,
        intervals_ms: Vec<f64>,
    ) -> Result<Self, SignalError> {
        validate_intervals(&intervals_ms)?;
        Ok(Self {
            subject_id: subject_id.into(),
            trial_id: trial_id.into(),
            intervals_ms,
            t0: None,
        })
    }
}

pub(crate) fn validate_intervals(intervals: &[f64]) -> Result<(), SignalError> {
    if let Some((index, &value)) = intervals
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v <= 0.0)
    {
        return Err(SignalError::InvalidInterval { index, value });
    }
    if intervals.len() < 2 {
        return Err(SignalError::TooShort(format!(
            "{} interval(s), need at least 2",
            intervals.len()
        )));
    }
    Ok(())
}

/// Artifact-cleaned series plus its uniformly resampled tachograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanRrSeries {
    pub intervals_ms: Vec<f64>,
    /// Occurrence time (s) of each kept beat, measured on the raw time axis.
    pub beat_times_s: Vec<f64>,
    pub raw_count: usize,
    pub artifact_rate: f64,
    pub valid_rr_ratio: f64,
    pub sample_rate_hz: f64,
    pub resampled_4hz: Vec<f64>,
    pub detrended: Vec<f64>,
}

impl CleanRrSeries {
    /// Builds a clean series directly from already-uniform tachogram samples.
    ///
    /// Used for synthetic spectra and tests where the beat sequence is irrelevant.
    pub fn from_tachogram(intervals_ms: Vec<f64>, detrended: Vec<f64>, sample_rate_hz: f64) -> Self {
        let mut t = 0.0;
        let beat_times_s = intervals_ms
            .iter()
            .map(|rr| {
                t += rr / 1000.0;
                t
            })
            .collect();
        Self {
            raw_count: intervals_ms.len(),
            intervals_ms,
            beat_times_s,
            artifact_rate: 0.0,
            valid_rr_ratio: 1.0,
            sample_rate_hz,
            resampled_4hz: detrended.clone(),
            detrended,
        }
    }
}

/// Half-open frequency band `[low_hz, high_hz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub const fn new(low_hz: f64, high_hz: f64) -> Self {
        Self { low_hz, high_hz }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.low_hz && f < self.high_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub ulf: Band,
    pub lf: Band,
    pub hf: Band,
}

impl Default for Bands {
    fn default() -> Self {
        Self {
            ulf: Band::new(0.0, 0.04),
            lf: Band::new(0.04, 0.15),
            // upper edge made inclusive by nudging past 0.40
            hf: Band::new(0.15, 0.40 + 1e-9),
        }
    }
}

/// Tunables for preprocessing and feature extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub sampen_m: usize,
    pub sampen_r_factor: f64,
    pub dfa_scale_min: usize,
    pub dfa_scale_max: usize,
    /// Rescale F²(n) by n²/(n²−4) so white noise fits α = 0.5 at short scales.
    pub dfa_bias_correction: bool,
    pub detrend_lambda: f64,
    pub resample_hz: f64,
    pub bands: Bands,
    pub artifact_min_ms: f64,
    pub artifact_max_ms: f64,
    /// Maximum relative jump from the previous kept beat.
    pub artifact_max_rel_change: f64,
    pub sdnn_index_window_s: f64,
    pub welch_segment: usize,
    pub welch_overlap: f64,
    pub min_spectral_samples: usize,
    pub min_nonlinear_beats: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sampen_m: 2,
            sampen_r_factor: 0.2,
            dfa_scale_min: 4,
            dfa_scale_max: 16,
            dfa_bias_correction: true,
            detrend_lambda: 500.0,
            resample_hz: 4.0,
            bands: Bands::default(),
            artifact_min_ms: 300.0,
            artifact_max_ms: 2000.0,
            artifact_max_rel_change: 0.2,
            sdnn_index_window_s: 30.0,
            welch_segment: 256,
            welch_overlap: 0.5,
            min_spectral_samples: 64,
            min_nonlinear_beats: 5,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), SignalError> {
        if self.dfa_scale_min < 4 || self.dfa_scale_max <= self.dfa_scale_min {
            return Err(SignalError::Config(format!(
                "DFA scales must satisfy 4 <= min < max, got {}..{}",
                self.dfa_scale_min, self.dfa_scale_max
            )));
        }
        let b = &self.bands;
        let ordered = b.ulf.low_hz < b.ulf.high_hz
            && b.ulf.high_hz <= b.lf.low_hz
            && b.lf.low_hz < b.lf.high_hz
            && b.lf.high_hz <= b.hf.low_hz
            && b.hf.low_hz < b.hf.high_hz;
        if !ordered {
            return Err(SignalError::Config("frequency bands must be ordered and non-overlapping".into()));
        }
        if self.sampen_m == 0 || self.sampen_r_factor <= 0.0 {
            return Err(SignalError::Config("SampEn needs m >= 1 and r > 0".into()));
        }
        if self.resample_hz <= 0.0 || self.welch_segment < 8 {
            return Err(SignalError::Config("invalid resampling or Welch segment".into()));
        }
        Ok(())
    }
}

/// Quality indicators carried alongside the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityIndicators {
    pub artifact_rate: f64,
    pub valid_rr_ratio: f64,
    /// Set when the spectrum came from a single short periodogram or could not be estimated.
    pub spectral_unreliable: bool,
    /// Set when SampEn or DFA hit a degenerate case.
    pub nonlinear_unstable: bool,
}

/// The complete per-trial feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePanel {
    pub subject_id: String,
    pub trial_id: String,
    pub time: TimeDomain,
    pub freq: Option<FrequencyFeatures>,
    pub nonlinear: Option<NonlinearFeatures>,
    pub poincare: PoincareFeatures,
    pub f_resp: Option<f64>,
    pub quality: QualityIndicators,
}

/// Runs the full extraction chain for one trial.
///
/// Spectral and nonlinear failures do not abort: the corresponding block is
/// left empty and the quality flags record why.
pub fn extract_features(
    raw: &RrSeries,
    resp: Option<&RespSignal>,
    cfg: &FeatureConfig,
) -> Result<FeaturePanel, SignalError> {
    cfg.validate()?;
    let clean = preprocess(raw, cfg)?;
    let time = time_domain(&clean, cfg)?;
    let (freq, spectral_unreliable) = match frequency_domain(&clean, cfg) {
        Ok(f) => {
            let unreliable = f.single_periodogram;
            (Some(f), unreliable)
        }
        Err(SignalError::SpectrumUnavailable(_)) => (None, true),
        Err(e) => return Err(e),
    };
    let (nonlinear, nonlinear_unstable) = match nonlinear(&clean, cfg) {
        Ok(n) => {
            let unstable = n.unstable;
            (Some(n), unstable)
        }
        Err(SignalError::TooShort(_)) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(FeaturePanel {
        subject_id: raw.subject_id.clone(),
        trial_id: raw.trial_id.clone(),
        time,
        freq,
        nonlinear,
        poincare: poincare(&clean.intervals_ms),
        f_resp: respiratory_frequency(resp),
        quality: QualityIndicators {
            artifact_rate: clean.artifact_rate,
            valid_rr_ratio: clean.valid_rr_ratio,
            spectral_unreliable,
            nonlinear_unstable,
        },
    })
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
