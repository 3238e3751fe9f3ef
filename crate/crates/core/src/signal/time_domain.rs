use serde::{Deserialize, Serialize};

use super::{mean, CleanRrSeries, FeatureConfig};
use crate::error::SignalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeDomain {
    pub mean_rr: f64,
    pub sdnn: f64,
    pub mean_hr: f64,
    pub sdhr: f64,
    pub rmssd: f64,
    pub nn50: usize,
    pub pnn50: f64,
    pub sdnn_index: f64,
}

/// Sample standard deviation (denominator N−1); zero for fewer than two values.
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() - 1) as f64).sqrt()
}

pub fn time_domain(clean: &CleanRrSeries, cfg: &FeatureConfig) -> Result<TimeDomain, SignalError> {
    let rr = &clean.intervals_ms;
    if rr.len() < 2 {
        return Err(SignalError::TooShort(format!("{} clean interval(s)", rr.len())));
    }
    let mean_rr = mean(rr);
    let hr: Vec<f64> = rr.iter().map(|v| 60_000.0 / v).collect();
    let diffs: Vec<f64> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let nn50 = diffs.iter().filter(|d| d.abs() > 50.0).count();
    Ok(TimeDomain {
        mean_rr,
        sdnn: sample_sd(rr),
        mean_hr: 60_000.0 / mean_rr,
        sdhr: sample_sd(&hr),
        rmssd,
        nn50,
        pnn50: nn50 as f64 / diffs.len() as f64 * 100.0,
        sdnn_index: sdnn_index(rr, cfg.sdnn_index_window_s),
    })
}

/// Mean of per-window SDNN over consecutive non-overlapping windows of `window_s`
/// seconds. Windows holding fewer than two intervals are skipped; if none
/// qualifies the whole-series SDNN is returned.
fn sdnn_index(rr: &[f64], window_s: f64) -> f64 {
    let mut sds = Vec::new();
    let mut current = Vec::new();
    let mut window_end = window_s;
    let mut t = 0.0;
    for &v in rr {
        t += v / 1000.0;
        while t > window_end {
            if current.len() >= 2 {
                sds.push(sample_sd(&current));
            }
            current.clear();
            window_end += window_s;
        }
        current.push(v);
    }
    if current.len() >= 2 {
        sds.push(sample_sd(&current));
    }
    if sds.is_empty() {
        sample_sd(rr)
    } else {
        mean(&sds)
    }
}
