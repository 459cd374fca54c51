//! Inputs shared by the benchmarks.

use statebreak::nalgebra::DMatrix;
use statebreak::{generate, DgpConfig};

/// A length-`n` AR(1) series (φ = 0.6, ARMA(1,1) errors) with one
/// intercept shift halfway.
pub fn shifted_series(n: usize, seed: u64) -> Vec<f64> {
    let mut dgp = DgpConfig::table(2, true).expect("design exists").with_seed(seed);
    dgp.t_len = n;
    dgp.break_at = n / 2;
    dgp.phi1 = 0.6;
    dgp.phi2 = 0.6;
    generate(&dgp).expect("valid design")
}

/// Two score columns: the series and its square, demeaned.
pub fn score_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let y = shifted_series(n, seed);
    let mut m = DMatrix::from_fn(n, 2, |i, j| if j == 0 { y[i] } else { y[i] * y[i] });
    for mut c in m.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
    }
    m
}
