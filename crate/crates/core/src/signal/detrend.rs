//! Smoothness-priors detrending.
//!
//! The trend is the regularized least-squares estimate
//! `(I + λ² D₂ᵀD₂)⁻¹ z` with `D₂` the second-difference operator; the
//! detrended series is `z` minus that trend. The system matrix is symmetric
//! positive definite and pentadiagonal, so a banded Cholesky solves it in O(N).

/// Returns `z - trend(z)` for regularization parameter `lambda`.
pub fn smoothness_priors_detrend(z: &[f64], lambda: f64) -> Vec<f64> {
    let trend = smoothness_priors_trend(z, lambda);
    z.iter().zip(trend).map(|(a, b)| a - b).collect()
}

pub(crate) fn smoothness_priors_trend(z: &[f64], lambda: f64) -> Vec<f64> {
    let n = z.len();
    if n < 3 {
        return z.to_vec();
    }
    let l2 = lambda * lambda;
    // band[i][d] holds A[i][i-d] for d = 0, 1, 2
    let mut band = vec![[0.0f64; 3]; n];
    for row in band.iter_mut() {
        row[0] = 1.0;
    }
    let coef = [1.0, -2.0, 1.0];
    for r in 0..n - 2 {
        for a in 0..3 {
            for b in 0..=a {
                band[r + a][a - b] += l2 * coef[a] * coef[b];
            }
        }
    }

    // Cholesky: A = L Lᵀ with L sharing the band structure.
    let mut l = vec![[0.0f64; 3]; n];
    for i in 0..n {
        for d in (0..=2.min(i)).rev() {
            let j = i - d;
            let mut sum = band[i][d];
            // Σ_k L[i][k] L[j][k] for k in max(i-2, 0)..j
            let k_start = i.saturating_sub(2);
            for k in k_start..j {
                sum -= l[i][i - k] * l[j][j - k];
            }
            if d == 0 {
                l[i][0] = sum.sqrt();
            } else {
                l[i][d] = sum / l[j][0];
            }
        }
    }

    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = z[i];
        for d in 1..=2.min(i) {
            s -= l[i][d] * y[i - d];
        }
        y[i] = s / l[i][0];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for d in 1..=2 {
            if i + d < n {
                s -= l[i + d][d] * x[i + d];
            }
        }
        x[i] = s / l[i][0];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense Gaussian elimination on the explicitly formed system.
    fn dense_trend(z: &[f64], lambda: f64) -> Vec<f64> {
        let n = z.len();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut d2 = vec![vec![0.0; n]; n - 2];
        for r in 0..n - 2 {
            d2[r][r] = 1.0;
            d2[r][r + 1] = -2.0;
            d2[r][r + 2] = 1.0;
        }
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n - 2).map(|r| d2[r][i] * d2[r][j]).sum();
                a[i][j] += lambda * lambda * s;
            }
        }
        let mut b = z.to_vec();
        for col in 0..n {
            let piv = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                let (top, rest) = a.split_at_mut(r);
                for (dst, src) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                    *dst -= f * src;
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn banded_solver_matches_dense_solve() {
        let z: Vec<f64> = (0..40).map(|i| ((i * 37 % 11) as f64) - 5.0 + 0.1 * i as f64).collect();
        for lambda in [1.0, 10.0, 500.0] {
            let fast = smoothness_priors_trend(&z, lambda);
            let slow = dense_trend(&z, lambda);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "lambda {lambda}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_series_detrends_to_zero() {
        let z = vec![800.0; 200];
        let d = smoothness_priors_detrend(&z, 500.0);
        assert!(d.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn linear_trend_removed() {
        let z: Vec<f64> = (0..300).map(|i| 700.0 + 0.5 * i as f64).collect();
        let d = smoothness_priors_detrend(&z, 500.0);
        assert!(d.iter().all(|v| v.abs() < 1e-5));
    }

    #[test]
    fn short_inputs_pass_through() {
        assert_eq!(smoothness_priors_detrend(&[1.0, 2.0], 500.0), vec![0.0, 0.0]);
    }
}
