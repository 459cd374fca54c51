use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition bound beyond which a moment matrix is treated as singular.
pub(crate) const MAX_CONDITION: f64 = 1e12;

pub(crate) struct Ols {
    pub coef: DVector<f64>,
    pub resid: DVector<f64>,
    /// `(X'X)^{-1}`.
    pub xtx_inv: DMatrix<f64>,
}

impl Ols {
    pub fn ssr(&self) -> f64 {
        self.resid.norm_squared()
    }
}

/// Least squares through the normal equations with a condition check on
/// the scaled moment matrix.
pub(crate) fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Ols> {
    let (n, k) = x.shape();
    if n < k || k == 0 {
        return Err(Error::Singular(format!("{n} rows for {k} regressors")));
    }
    let xtx = x.transpose() * x;
    let scale: DVector<f64> = xtx.diagonal().map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 });
    if scale.iter().any(|&s| s == 0.0) {
        return Err(Error::Singular("regressor column is identically zero".into()));
    }
    let scaled = DMatrix::from_fn(k, k, |i, j| xtx[(i, j)] * scale[i] * scale[j]);
    let eig = scaled.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmin > 0.0) || lmax / lmin > MAX_CONDITION {
        return Err(Error::Singular(format!(
            "moment matrix condition {:.3e} exceeds bound",
            lmax / lmin.max(f64::MIN_POSITIVE)
        )));
    }
    let inv_scaled = scaled
        .try_inverse()
        .ok_or_else(|| Error::Singular("moment matrix not invertible".into()))?;
    let xtx_inv = DMatrix::from_fn(k, k, |i, j| inv_scaled[(i, j)] * scale[i] * scale[j]);
    let coef = &xtx_inv * (x.transpose() * y);
    let resid = y - x * &coef;
    Ok(Ols {
        coef,
        resid,
        xtx_inv,
    })
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}
