use super::detrend::smoothness_priors_detrend;
use super::spline::CubicSpline;
use super::{validate_intervals, CleanRrSeries, FeatureConfig, RrSeries};
use crate::error::SignalError;

/// Removes artifacts, resamples the kept beats onto a uniform grid and detrends.
///
/// A beat is an artifact when it falls outside the physiological range or
/// jumps by more than the configured fraction from the previous kept beat.
/// Beat times come from the raw cumulative sum, so rejected beats leave gaps
/// that the cubic spline bridges on the uniform grid.
pub fn preprocess(raw: &RrSeries, cfg: &FeatureConfig) -> Result<CleanRrSeries, SignalError> {
    validate_intervals(&raw.intervals_ms)?;

    let mut kept = Vec::with_capacity(raw.intervals_ms.len());
    let mut times = Vec::with_capacity(raw.intervals_ms.len());
    let mut t = 0.0;
    let mut prev: Option<f64> = None;
    for &rr in &raw.intervals_ms {
        t += rr / 1000.0;
        let in_range = rr >= cfg.artifact_min_ms && rr <= cfg.artifact_max_ms;
        let smooth = prev.is_none_or(|p| (rr - p).abs() / p <= cfg.artifact_max_rel_change);
        if in_range && smooth {
            kept.push(rr);
            times.push(t);
            prev = Some(rr);
        }
    }

    let raw_count = raw.intervals_ms.len();
    if kept.is_empty() {
        return Err(SignalError::AllArtifacts);
    }
    if kept.len() < 2 {
        return Err(SignalError::TooShort(format!(
            "{} valid interval(s) after cleaning",
            kept.len()
        )));
    }
    let valid_rr_ratio = kept.len() as f64 / raw_count as f64;
    let artifact_rate = (raw_count - kept.len()) as f64 / raw_count as f64;

    let spline = CubicSpline::new(&times, &kept)
        .ok_or_else(|| SignalError::DegenerateSeries("beat times not increasing".into()))?;
    let step = 1.0 / cfg.resample_hz;
    let start = times[0];
    let span = times[times.len() - 1] - start;
    let samples = (span / step + 1e-9).floor() as usize + 1;
    let resampled: Vec<f64> = (0..samples).map(|i| spline.eval(start + i as f64 * step)).collect();
    let detrended = smoothness_priors_detrend(&resampled, cfg.detrend_lambda);

    Ok(CleanRrSeries {
        intervals_ms: kept,
        beat_times_s: times,
        raw_count,
        artifact_rate,
        valid_rr_ratio,
        sample_rate_hz: cfg.resample_hz,
        resampled_4hz: resampled,
        detrended,
    })
}
