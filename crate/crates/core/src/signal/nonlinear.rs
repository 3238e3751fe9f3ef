//! Poincaré geometry, sample entropy and detrended fluctuation analysis.

use serde::{Deserialize, Serialize};

use super::{median, sample_sd, CleanRrSeries, FeatureConfig};
use crate::error::SignalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearFeatures {
    pub sd1: f64,
    pub sd2: f64,
    pub sampen: f64,
    pub dfa_alpha: f64,
    /// Template-match counts behind SampEn: (length m+1, length m).
    pub sampen_counts: (u64, u64),
    pub unstable: bool,
}

/// Point statistics of the (RR(n), RR(n+1)) scatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareFeatures {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Coordinate-wise median of the scatter.
    pub center_x: f64,
    pub center_y: f64,
}

pub fn poincare(rr: &[f64]) -> PoincareFeatures {
    let n_points = rr.len().saturating_sub(1);
    if n_points == 0 {
        return PoincareFeatures {
            n_points,
            x_min: 0.0,
            x_max: 0.0,
            y_min: 0.0,
            y_max: 0.0,
            center_x: 0.0,
            center_y: 0.0,
        };
    }
    let mut xs = rr[..n_points].to_vec();
    let mut ys = rr[1..].to_vec();
    let fold = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (x_min, x_max) = fold(&xs);
    let (y_min, y_max) = fold(&ys);
    PoincareFeatures {
        n_points,
        x_min,
        x_max,
        y_min,
        y_max,
        center_x: median(&mut xs),
        center_y: median(&mut ys),
    }
}

/// Counts template matches for SampEn: returns `(A, B)` where `B` counts pairs
/// of length-`m` templates within Chebyshev distance `r` and `A` the pairs that
/// still match at length `m + 1`. Both use the first `N − m` templates.
pub fn sample_entropy_counts(x: &[f64], m: usize, r: f64) -> (u64, u64) {
    let n = x.len();
    if n <= m + 1 {
        return (0, 0);
    }
    let templates = n - m;
    let (mut a, mut b) = (0u64, 0u64);
    for i in 0..templates {
        for j in i + 1..templates {
            if (0..m).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    (a, b)
}

/// SampEn with tolerance `r_factor · SD(x)`.
///
/// Returns `(value, counts, defined)`. Zero variance yields 0. When either
/// count is zero the value is capped at `ln(B_max)` where `B_max` is the number
/// of template pairs, and `defined` is false.
pub fn sample_entropy(x: &[f64], m: usize, r_factor: f64) -> (f64, (u64, u64), bool) {
    let sd = sample_sd(x);
    if sd == 0.0 {
        return (0.0, (0, 0), false);
    }
    let (a, b) = sample_entropy_counts(x, m, r_factor * sd);
    if a == 0 || b == 0 {
        let t = x.len().saturating_sub(m) as f64;
        let pairs = (t * (t - 1.0) / 2.0).max(1.0);
        return (pairs.ln(), (a, b), false);
    }
    (-((a as f64) / (b as f64)).ln(), (a, b), true)
}

/// Root-mean-square fluctuation F(n) of the integrated profile for each scale.
pub fn dfa_fluctuations(x: &[f64], scales: impl IntoIterator<Item = usize>) -> Vec<(usize, f64)> {
    let m = super::mean(x);
    let mut profile = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for v in x {
        acc += v - m;
        profile.push(acc);
    }
    scales
        .into_iter()
        .filter(|&n| n >= 2 && profile.len() / n >= 1)
        .map(|n| {
            let boxes = profile.len() / n;
            // closed-form least squares over t = 0..n-1
            let nf = n as f64;
            let t_mean = (nf - 1.0) / 2.0;
            let t_var: f64 = (0..n).map(|t| (t as f64 - t_mean).powi(2)).sum();
            let mut sq = 0.0;
            for b in 0..boxes {
                let seg = &profile[b * n..(b + 1) * n];
                let y_mean = seg.iter().sum::<f64>() / nf;
                let cov: f64 = seg.iter().enumerate().map(|(t, y)| (t as f64 - t_mean) * (y - y_mean)).sum();
                let slope = cov / t_var;
                sq += seg
                    .iter()
                    .enumerate()
                    .map(|(t, y)| {
                        let fit = y_mean + slope * (t as f64 - t_mean);
                        (y - fit) * (y - fit)
                    })
                    .sum::<f64>();
            }
            (n, (sq / (boxes * n) as f64).sqrt())
        })
        .collect()
}

/// DFA scaling exponent: slope of ln F(n) against ln n. `None` when fewer than
/// two scales have a positive fluctuation.
///
/// With `corrected`, each F²(n) is multiplied by n²/(n²−4). For uncorrelated
/// noise E[F²(n)] = σ²(n²−4)/(15n), so the rescaled curve is an exact power
/// law and short scales no longer inflate α.
pub fn dfa_alpha(x: &[f64], scale_min: usize, scale_max: usize, corrected: bool) -> Option<f64> {
    let pts: Vec<(f64, f64)> = dfa_fluctuations(x, scale_min..=scale_max)
        .into_iter()
        .filter(|(_, f)| *f > 0.0)
        .map(|(n, f)| {
            let nf = n as f64;
            let k = if corrected && n > 2 { nf * nf / (nf * nf - 4.0) } else { 1.0 };
            (nf.ln(), f.ln() + 0.5 * k.ln())
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = pts.iter().map(|(a, _)| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn nonlinear(clean: &CleanRrSeries, cfg: &FeatureConfig) -> Result<NonlinearFeatures, SignalError> {
    let rr = &clean.intervals_ms;
    if rr.len() < cfg.min_nonlinear_beats {
        return Err(SignalError::TooShort(format!(
            "{} intervals, nonlinear metrics need {}",
            rr.len(),
            cfg.min_nonlinear_beats
        )));
    }
    let diffs: Vec<f64> = rr.windows(2).map(|w| w[1] - w[0]).collect();
    let sd1 = sample_sd(&diffs) / std::f64::consts::SQRT_2;
    let sdnn = sample_sd(rr);
    let sd2 = (2.0 * sdnn * sdnn - sd1 * sd1).max(0.0).sqrt();
    let (sampen, counts, sampen_defined) = sample_entropy(rr, cfg.sampen_m, cfg.sampen_r_factor);
    let alpha = if sdnn > 0.0 {
        dfa_alpha(rr, cfg.dfa_scale_min, cfg.dfa_scale_max, cfg.dfa_bias_correction)
    } else {
        None
    };
    Ok(NonlinearFeatures {
        sd1,
        sd2,
        sampen,
        dfa_alpha: alpha.unwrap_or(0.0),
        sampen_counts: counts,
        unstable: !sampen_defined || alpha.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn clean(v: Vec<f64>) -> CleanRrSeries {
        CleanRrSeries::from_tachogram(v, vec![], 4.0)
    }

    /// Independent template construction and all-pairs comparison.
    fn brute_counts(x: &[f64], m: usize, r: f64) -> (u64, u64) {
        let n = x.len();
        let tm: Vec<&[f64]> = (0..n - m).map(|i| &x[i..i + m]).collect();
        let tm1: Vec<&[f64]> = (0..n - m).map(|i| &x[i..i + m + 1]).collect();
        let count = |t: &[&[f64]]| {
            let mut c = 0;
            for i in 0..t.len() {
                for j in i + 1..t.len() {
                    let d = t[i].iter().zip(t[j]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if d <= r {
                        c += 1;
                    }
                }
            }
            c
        };
        (count(&tm1), count(&tm))
    }

    #[test]
    fn constant_series_geometry() {
        let n = nonlinear(&clean(vec![800.0; 20]), &FeatureConfig::default()).unwrap();
        assert_eq!(n.sd1, 0.0);
        assert_eq!(n.sd2, 0.0);
        assert_eq!(n.sampen, 0.0);
        assert!(n.unstable);
        assert_eq!(poincare(&[800.0; 20]).n_points, 19);
    }

    #[test]
    fn sampen_matches_brute_force_on_uniform_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x: Vec<f64> = (0..200).map(|_| rng.random_range(600.0..1000.0)).collect();
        let r = 0.2 * sample_sd(&x);
        assert_eq!(sample_entropy_counts(&x, 2, r), brute_counts(&x, 2, r));
        let (a, b) = brute_counts(&x, 2, r);
        let (v, _, ok) = sample_entropy(&x, 2, 0.2);
        assert!(ok);
        assert_eq!(v, -((a as f64) / (b as f64)).ln());
    }

    #[test]
    fn sampen_offset_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..150).map(|_| rng.random_range(0.0..1.0)).collect();
        let shifted: Vec<f64> = x.iter().map(|v| v + 1000.0).collect();
        let a = sample_entropy(&x, 2, 0.2);
        let b = sample_entropy(&shifted, 2, 0.2);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn dfa_white_noise_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..500).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = dfa_alpha(&x, 4, 16, true).unwrap();
        assert!((a - 0.5).abs() < 0.1, "alpha {a}");
    }

    #[test]
    fn dfa_correction_matches_white_noise_expectation() {
        // averaged raw F² over many seeds tracks (n²−4)/(15n) for unit-variance noise
        let mut acc = [0.0; 13];
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..2000).map(|_| rng.random_range(-3f64.sqrt()..3f64.sqrt())).collect();
            for (i, (_, f)) in dfa_fluctuations(&x, 4..=16).into_iter().enumerate() {
                acc[i] += f * f / 40.0;
            }
        }
        for (i, f2) in acc.iter().enumerate() {
            let n = (i + 4) as f64;
            let expected = (n * n - 4.0) / (15.0 * n);
            assert!((f2 / expected - 1.0).abs() < 0.05, "n={n} ratio {}", f2 / expected);
        }
    }

    #[test]
    fn poincare_bounds_and_center() {
        let p = poincare(&[800.0, 820.0, 780.0, 810.0]);
        assert_eq!(p.n_points, 3);
        assert_eq!((p.x_min, p.x_max), (780.0, 820.0));
        assert_eq!((p.y_min, p.y_max), (780.0, 820.0));
        assert_eq!(p.center_x, 800.0);
        assert_eq!(p.center_y, 810.0);
    }

    #[test]
    fn too_short_for_nonlinear() {
        assert!(matches!(
            nonlinear(&clean(vec![800.0, 810.0, 790.0]), &FeatureConfig::default()),
            Err(SignalError::TooShort(_))
        ));
    }
}
