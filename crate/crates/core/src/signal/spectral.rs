//! Averaged-periodogram (Welch) PSD and band statistics.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{Band, CleanRrSeries, FeatureConfig};
use crate::error::SignalError;

/// One-sided power spectral density (units² / Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub df: f64,
    pub segments: usize,
}

impl Psd {
    /// Integrated power over a band.
    pub fn band_power(&self, band: &Band) -> f64 {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| band.contains(**f))
            .map(|(_, p)| p * self.df)
            .sum()
    }

    /// Frequency of the largest PSD bin inside `band`, ignoring DC.
    pub fn peak_in(&self, band: &Band) -> Option<f64> {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f > 0.0 && band.contains(**f))
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(f, _)| *f)
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.df
    }
}

/// Welch estimate with a periodic Hann window and per-segment mean removal.
///
/// Inputs shorter than `segment` fall back to one periodogram over the whole
/// series (`segments == 1`).
pub fn welch_psd(x: &[f64], fs: f64, segment: usize, overlap: f64) -> Psd {
    let seg = segment.min(x.len()).max(1);
    let step = ((seg as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let window: Vec<f64> = (0..seg)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / seg as f64).cos())
        .collect();
    let window_energy: f64 = window.iter().map(|w| w * w).sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg);
    let bins = seg / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut segments = 0;
    let mut start = 0;
    while start + seg <= x.len() {
        let chunk = &x[start..start + seg];
        let m = chunk.iter().sum::<f64>() / seg as f64;
        let mut buf: Vec<Complex<f64>> = chunk
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex::new((v - m) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (k, slot) in acc.iter_mut().enumerate() {
            *slot += buf[k].norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (fs * window_energy * segments.max(1) as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (seg.is_multiple_of(2) && k == seg / 2) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let df = fs / seg as f64;
    Psd {
        freqs: (0..bins).map(|k| k as f64 * df).collect(),
        power,
        df,
        segments,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPowers {
    pub ulf: f64,
    pub lf: f64,
    pub hf: f64,
    /// Power over every bin up to Nyquist.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFeatures {
    /// Peak frequencies in Hz; 0.0 when a band holds no bin.
    pub peak_ulf: f64,
    pub peak_lf: f64,
    pub peak_hf: f64,
    pub ulf_ratio: f64,
    pub lf_ratio: f64,
    pub hf_ratio: f64,
    pub lf_hf: f64,
    pub band_powers: BandPowers,
    pub f_hf: f64,
    pub df_hz: f64,
    pub single_periodogram: bool,
}

pub fn frequency_domain(clean: &CleanRrSeries, cfg: &FeatureConfig) -> Result<FrequencyFeatures, SignalError> {
    let x = &clean.detrended;
    if x.len() < cfg.min_spectral_samples {
        return Err(SignalError::SpectrumUnavailable(format!(
            "{} tachogram samples, need {}",
            x.len(),
            cfg.min_spectral_samples
        )));
    }
    let psd = welch_psd(x, clean.sample_rate_hz, cfg.welch_segment, cfg.welch_overlap);
    let bands = &cfg.bands;
    let powers = BandPowers {
        ulf: psd.band_power(&Band::new(f64::MIN_POSITIVE, bands.ulf.high_hz)),
        lf: psd.band_power(&bands.lf),
        hf: psd.band_power(&bands.hf),
        total: psd.total_power(),
    };
    if powers.total <= 0.0 || powers.hf <= 0.0 {
        return Err(SignalError::SpectrumUnavailable("no power in the HF band".into()));
    }
    let peak_hf = psd.peak_in(&bands.hf).unwrap_or(0.0);
    Ok(FrequencyFeatures {
        peak_ulf: psd.peak_in(&bands.ulf).unwrap_or(0.0),
        peak_lf: psd.peak_in(&bands.lf).unwrap_or(0.0),
        peak_hf,
        ulf_ratio: powers.ulf / powers.total,
        lf_ratio: powers.lf / powers.total,
        hf_ratio: powers.hf / powers.total,
        lf_hf: powers.lf / powers.hf,
        band_powers: powers,
        f_hf: peak_hf,
        df_hz: psd.df,
        single_periodogram: psd.segments <= 1,
    })
}
