//! Prewhitened kernel estimation of long-run covariance matrices.
//!
//! Scores `v_t` (rows of an `n × d` matrix) are filtered through a fitted
//! VAR(1) without intercept, the filtered series is smoothed with the
//! quadratic-spectral kernel at a bandwidth from the AR(1) plug-in rule, and
//! the result is recoloured through `(I − Â)⁻¹`. Covariances are on the
//! average-score scale (divided by the number of filtered observations).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Largest singular value allowed in the prewhitening VAR matrix.
pub const PREWHITEN_CLAMP: f64 = 0.97;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    QuadraticSpectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthRule {
    /// Andrews' plug-in from per-component AR(1) fits, equal weights.
    Ar1Approximation,
    /// User-fixed bandwidth; 0 keeps only the contemporaneous term.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HacConfig {
    pub prewhiten: bool,
    pub kernel: Kernel,
    pub bandwidth_rule: BandwidthRule,
}

impl Default for HacConfig {
    fn default() -> Self {
        HacConfig {
            prewhiten: true,
            kernel: Kernel::QuadraticSpectral,
            bandwidth_rule: BandwidthRule::Ar1Approximation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HacResult {
    pub covariance: DMatrix<f64>,
    pub bandwidth: f64,
    /// VAR(1) matrix used for recolouring, after clamping.
    pub prewhitening_coefficients: Option<DMatrix<f64>>,
    /// Prewhitening was requested but the VAR regression was singular.
    pub prewhitening_failed: bool,
    /// Negative eigenvalues were clipped to zero.
    pub clipped: bool,
}

/// Quadratic-spectral kernel weight.
pub fn qs_kernel(x: f64) -> f64 {
    let d = 6.0 * PI * x / 5.0;
    if d.abs() < 0.5 {
        // 3 Σ_{k≥1} (−1)^{k+1} 2k/(2k+1)! d^{2k−2}
        let d2 = d * d;
        let mut term = 1.0 / 3.0; // 2/(3!) at k = 1
        let mut sum = term;
        for k in 2..10 {
            let k = k as f64;
            term *= -d2 * (2.0 * k) / ((2.0 * k - 2.0) * (2.0 * k) * (2.0 * k + 1.0));
            sum += term;
        }
        3.0 * sum
    } else {
        3.0 * (d.sin() / d - d.cos()) / (d * d)
    }
}

/// Fits `v_t = A v_{t−1} + e_t` by least squares, clamps the singular values
/// of `A` at [`PREWHITEN_CLAMP`], and returns the filtered residuals
/// (`n − 1` rows) with the clamped `A`.
pub fn prewhiten(scores: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, d) = scores.shape();
    if n < d + 2 {
        return Err(Error::TooShort {
            needed: d + 2,
            have: n,
        });
    }
    let lagged = scores.rows(0, n - 1).into_owned();
    let current = scores.rows(1, n - 1).into_owned();
    let xtx = lagged.transpose() * &lagged;
    let eig = xtx.clone().symmetric_eigen().eigenvalues;
    let (lmin, lmax) = (eig.min(), eig.max());
    if !(lmax > 0.0) || !(lmin > lmax * 1e-12) {
        return Err(Error::Singular("prewhitening VAR(1) regression".into()));
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::Singular("prewhitening VAR(1) regression".into()))?;
    // current ≈ lagged · B, so A = Bᵀ.
    let b = inv * lagged.transpose() * &current;
    let a = clamp_singular_values(b.transpose(), PREWHITEN_CLAMP);
    let filtered = &current - &lagged * a.transpose();
    Ok((filtered, a))
}

fn clamp_singular_values(a: DMatrix<f64>, bound: f64) -> DMatrix<f64> {
    let mut svd = a.clone().svd(true, true);
    if svd.singular_values.iter().all(|&s| s <= bound) {
        return a;
    }
    svd.singular_values.apply(|s| *s = s.min(bound));
    svd.recompose().expect("both factors computed")
}

/// Andrews' AR(1) plug-in bandwidth for the QS kernel, components weighted
/// equally: `1.3221 (α̂(2) n)^{1/5}`.
pub fn ar1_bandwidth(v: &DMatrix<f64>) -> f64 {
    let (n, d) = v.shape();
    if n < 2 {
        return 0.0;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d {
        let col = v.column(i);
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for t in 1..n {
            sxx += col[t - 1] * col[t - 1];
            sxy += col[t - 1] * col[t];
        }
        if !(sxx > 0.0) {
            continue;
        }
        let rho = sxy / sxx;
        let sig2 = (1..n)
            .map(|t| (col[t] - rho * col[t - 1]).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        let s4 = sig2 * sig2;
        num += 4.0 * rho * rho * s4 / (1.0 - rho).powi(8);
        den += s4 / (1.0 - rho).powi(4);
    }
    if !(den > 0.0) || !num.is_finite() {
        return 0.0;
    }
    1.3221 * (num / den * n as f64).powf(0.2)
}

/// Kernel-weighted sum of autocovariances, divided by the number of rows.
fn kernel_lrv(v: &DMatrix<f64>, bandwidth: f64) -> DMatrix<f64> {
    let (n, d) = v.shape();
    let mut j = v.transpose() * v;
    if bandwidth > 0.0 {
        for lag in 1..n {
            let w = qs_kernel(lag as f64 / bandwidth);
            if w == 0.0 {
                continue;
            }
            let mut gamma = DMatrix::<f64>::zeros(d, d);
            for t in lag..n {
                for a in 0..d {
                    let va = v[(t, a)];
                    for b in 0..d {
                        gamma[(a, b)] += va * v[(t - lag, b)];
                    }
                }
            }
            j += (&gamma + gamma.transpose()) * w;
        }
    }
    j / n as f64
}

/// Long-run covariance of `scores` (rows = time).
pub fn hac_covariance(scores: &DMatrix<f64>, config: &HacConfig) -> Result<HacResult> {
    let (n, d) = scores.shape();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, have: n });
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let mut prewhitening_failed = false;
    let (filtered, a) = if config.prewhiten {
        match prewhiten(scores) {
            Ok((f, a)) => (f, Some(a)),
            Err(_) => {
                prewhitening_failed = true;
                (scores.clone(), None)
            }
        }
    } else {
        (scores.clone(), None)
    };
    let bandwidth = match config.bandwidth_rule {
        BandwidthRule::Ar1Approximation => ar1_bandwidth(&filtered),
        BandwidthRule::Fixed(b) => b.max(0.0),
    };
    let mut cov = kernel_lrv(&filtered, bandwidth);
    if let Some(a) = &a {
        let ia = (DMatrix::<f64>::identity(d, d) - a)
            .try_inverse()
            .ok_or_else(|| Error::Singular("recolouring matrix I − A".into()))?;
        cov = &ia * cov * ia.transpose();
    }
    symmetrize(&mut cov);
    let eig = cov.clone().symmetric_eigen();
    let clipped = eig.eigenvalues.iter().any(|&l| l < 0.0);
    if clipped {
        let vals = eig.eigenvalues.map(|l| l.max(0.0));
        cov = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
        symmetrize(&mut cov);
    }
    Ok(HacResult {
        covariance: cov,
        bandwidth,
        prewhitening_coefficients: a,
        prewhitening_failed,
        clipped,
    })
}

/// Scalar convenience wrapper: long-run variance of a univariate series.
pub fn long_run_variance(series: &[f64], config: &HacConfig) -> Result<f64> {
    let m = DMatrix::from_column_slice(series.len(), 1, series);
    Ok(hac_covariance(&m, config)?.covariance[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn kernel_series(x: f64, terms: usize) -> f64 {
        // independent oracle: Taylor series of sin(d)/d − cos(d) divided by d²/3
        let d = 6.0 * PI * x / 5.0;
        let mut fact = 1.0f64; // (2k+1)!
        let mut sum = 0.0;
        for k in 1..=terms {
            fact *= (2 * k) as f64 * (2 * k + 1) as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * (2 * k) as f64 / fact * d.powi(2 * k as i32 - 2);
        }
        3.0 * sum
    }

    #[test]
    fn kernel_values() {
        assert_eq!(qs_kernel(0.0), 1.0);
        for x in [0.3, 1.7] {
            assert_eq!(qs_kernel(x), qs_kernel(-x));
        }
        let oracle = kernel_series(1.2, 20);
        assert!((qs_kernel(1.2) - oracle).abs() < 1e-12, "{} {}", qs_kernel(1.2), oracle);
        // both branches agree near the switch
        let x = 0.5 * 5.0 / (6.0 * PI);
        assert!((qs_kernel(x * (1.0 - 1e-10)) - qs_kernel(x * (1.0 + 1e-10))).abs() < 1e-9);
        assert!((qs_kernel(0.01) - kernel_series(0.01, 20)).abs() < 1e-14);
    }

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let e = normals(n, seed);
        let mut out = Vec::with_capacity(n);
        let mut prev = 0.0;
        for v in e {
            prev = rho * prev + v;
            out.push(prev);
        }
        out
    }

    #[test]
    fn prewhiten_iid_is_near_zero() {
        let n = 4000;
        let v = normals(n, 11);
        let (_, a) = prewhiten(&DMatrix::from_column_slice(n, 1, &v)).unwrap();
        assert!(a[(0, 0)].abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn prewhiten_recovers_ar_coefficient() {
        let n = 4000;
        let v = ar1(n, 0.8, 12);
        let (f, a) = prewhiten(&DMatrix::from_column_slice(n, 1, &v)).unwrap();
        assert!((a[(0, 0)] - 0.8).abs() < 0.05);
        assert_eq!(f.nrows(), n - 1);
    }

    #[test]
    fn prewhiten_zero_is_singular() {
        let z = DMatrix::<f64>::zeros(50, 2);
        assert!(matches!(prewhiten(&z), Err(Error::Singular(_))));
    }

    #[test]
    fn clamps_near_unit_root() {
        let n = 2000;
        let v = ar1(n, 0.999, 5);
        let (_, a) = prewhiten(&DMatrix::from_column_slice(n, 1, &v)).unwrap();
        assert!(a[(0, 0)] <= PREWHITEN_CLAMP + 1e-12);
    }

    #[test]
    fn iid_long_run_variance() {
        let v: Vec<f64> = normals(5000, 21).iter().map(|x| 2.0 * x).collect();
        let lrv = long_run_variance(&v, &HacConfig::default()).unwrap();
        assert!((lrv / 4.0 - 1.0).abs() < 0.10, "{lrv}");
    }

    #[test]
    fn ar_long_run_variance() {
        // innovations N(0,1), ρ = 0.5: long-run variance 1/(1−ρ)² = 4
        let v = ar1(5000, 0.5, 22);
        let lrv = long_run_variance(&v, &HacConfig::default()).unwrap();
        assert!((lrv / 4.0 - 1.0).abs() < 0.15, "{lrv}");
    }

    #[test]
    fn zero_scores_give_zero() {
        let z = DMatrix::<f64>::zeros(30, 2);
        let r = hac_covariance(&z, &HacConfig::default()).unwrap();
        assert!(r.covariance.iter().all(|&v| v == 0.0));
        assert!(r.prewhitening_failed);
    }

    #[test]
    fn scaling_is_quadratic() {
        let n = 300;
        let a = normals(n, 1);
        let b = ar1(n, 0.3, 2);
        let m = DMatrix::from_fn(n, 2, |i, j| if j == 0 { a[i] } else { a[i] + b[i] });
        let base = hac_covariance(&m, &HacConfig::default()).unwrap();
        let scaled = hac_covariance(&(&m * 3.0), &HacConfig::default()).unwrap();
        for (x, y) in base.covariance.iter().zip(scaled.covariance.iter()) {
            assert!((9.0 * x - y).abs() <= 1e-9 * y.abs().max(1e-12));
        }
        assert!((base.bandwidth - scaled.bandwidth).abs() < 1e-9);
    }

    #[test]
    fn white_estimator_without_smoothing() {
        let n = 200;
        let a = normals(n, 3);
        let b = normals(n, 4);
        let m = DMatrix::from_fn(n, 2, |i, j| if j == 0 { a[i] } else { b[i] * a[i] });
        let cfg = HacConfig {
            prewhiten: false,
            kernel: Kernel::QuadraticSpectral,
            bandwidth_rule: BandwidthRule::Fixed(0.0),
        };
        let r = hac_covariance(&m, &cfg).unwrap();
        let white = m.transpose() * &m / n as f64;
        assert_eq!(r.covariance, white);
    }

    #[test]
    fn result_is_symmetric_psd() {
        let n = 400;
        let a = ar1(n, 0.6, 8);
        let b = normals(n, 9);
        let m = DMatrix::from_fn(n, 2, |i, j| if j == 0 { a[i] } else { a[i] * 0.5 + b[i] });
        let r = hac_covariance(&m, &HacConfig::default()).unwrap();
        assert_eq!(r.covariance, r.covariance.transpose());
        let eig = r.covariance.clone().symmetric_eigen().eigenvalues;
        assert!(eig.min() >= -1e-10 * r.covariance.trace());
    }
}
