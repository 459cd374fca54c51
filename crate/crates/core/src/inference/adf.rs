//! Augmented Dickey-Fuller test with an intercept and AIC lag selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ols;

const MIN_LEN: usize = 25;

/// Response-surface coefficients `(β∞, β₁, β₂, β₃)` of the constant-only
/// critical values at 1%, 5% and 10%.
const SURFACE: [(f64, [f64; 4]); 3] = [
    (0.01, [-3.43035, -6.5393, -16.786, -79.433]),
    (0.05, [-2.86154, -2.8903, -4.234, -40.040]),
    (0.10, [-2.56677, -1.5384, -2.809, 0.0]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio of the lagged level.
    pub statistic: f64,
    pub lag_order: usize,
    /// Observations in the final regression.
    pub n_obs: usize,
    pub critical_value_1pct: f64,
    pub reject_at_1pct: bool,
    pub alpha: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// Finite-sample critical value at `alpha ∈ {0.01, 0.05, 0.10}`.
pub fn critical_value(alpha: f64, n_obs: usize) -> Result<f64> {
    let (_, b) = SURFACE
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .ok_or_else(|| Error::InvalidArgument(format!("no critical value tabulated for level {alpha}")))?;
    let t = n_obs as f64;
    Ok(b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t))
}

pub fn max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Regression of `Δy_t` on `(1, y_{t−1}, Δy_{t−1}, …, Δy_{t−k})` for
/// `t` from `first` (index into `dy`).
fn design(y: &[f64], dy: &[f64], k: usize, first: usize) -> (DMatrix<f64>, DVector<f64>) {
    let n = dy.len() - first;
    let x = DMatrix::from_fn(n, k + 2, |r, c| {
        let t = first + r;
        match c {
            0 => 1.0,
            1 => y[t],
            _ => dy[t - (c - 1)],
        }
    });
    (x, DVector::from_iterator(n, dy[first..].iter().copied()))
}

/// ADF test of a unit root in `y` against stationarity; left-tailed at
/// `alpha`.
pub fn adf_test(y: &[f64], alpha: f64) -> Result<AdfResult> {
    if y.len() < MIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_LEN,
            have: y.len(),
        });
    }
    critical_value(alpha, y.len())?;
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[t] = y[t+1] − y[t] pairs with lagged level y[t]
    let kmax = max_lag(y.len()).min(dy.len().saturating_sub(4) / 2);
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..=kmax {
        let (x, v) = design(y, &dy, k, kmax);
        let Ok(fit) = ols(&x, &v) else { continue };
        let n = v.len() as f64;
        let aic = (fit.ssr() / n).ln() + 2.0 * (k + 2) as f64 / n;
        if aic < best.0 {
            best = (aic, k);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Singular("no lag order gives a regular regression".into()));
    }
    let k = best.1;
    let (x, v) = design(y, &dy, k, k);
    let fit = ols(&x, &v)?;
    let n = v.len();
    let s2 = fit.ssr() / (n - (k + 2)) as f64;
    let se = (s2 * fit.xtx_inv[(1, 1)]).sqrt();
    let statistic = if se > 0.0 {
        fit.coef[1] / se
    } else if fit.coef[1] < 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let critical_value_1pct = critical_value(0.01, n)?;
    let cv = critical_value(alpha, n)?;
    Ok(AdfResult {
        statistic,
        lag_order: k,
        n_obs: n,
        critical_value_1pct,
        reject_at_1pct: statistic < critical_value_1pct,
        alpha,
        critical_value: cv,
        reject: statistic < cv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn asymptotic_critical_values() {
        assert!((critical_value(0.01, 1_000_000_000).unwrap() + 3.43035).abs() < 1e-6);
        let cv = critical_value(0.05, 100).unwrap();
        assert!((cv - (-2.86154 - 0.028903 - 0.0004234 - 0.00004004)).abs() < 1e-9);
        assert!(critical_value(0.02, 100).is_err());
    }

    #[test]
    fn white_noise_rejects() {
        let mut rejections = 0;
        for seed in 0..200 {
            if adf_test(&noise(seed, 500), 0.01).unwrap().reject_at_1pct {
                rejections += 1;
            }
        }
        assert!(rejections >= 198, "{rejections}");
    }

    #[test]
    fn random_walk_mostly_accepts() {
        let mut accepts = 0;
        for seed in 0..100 {
            let mut y = noise(seed + 1000, 500);
            for t in 1..y.len() {
                y[t] += y[t - 1];
            }
            if !adf_test(&y, 0.01).unwrap().reject_at_1pct {
                accepts += 1;
            }
        }
        assert!(accepts >= 90, "{accepts}");
    }

    #[test]
    fn invariant_to_level_shift() {
        let y = noise(4, 300);
        let shifted: Vec<f64> = y.iter().map(|v| v + 17.0).collect();
        let a = adf_test(&y, 0.05).unwrap();
        let b = adf_test(&shifted, 0.05).unwrap();
        assert_eq!(a.lag_order, b.lag_order);
        assert!((a.statistic - b.statistic).abs() < 1e-8);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(adf_test(&[1.0; 10], 0.01), Err(Error::TooShort { .. })));
    }
}
