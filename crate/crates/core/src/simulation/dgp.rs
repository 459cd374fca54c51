//! Single-break processes `y_t = c_j + φ_j y_{t−1} + ε_t`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ErrorKind {
    Iid,
    /// `ε_t = ψ ε_{t−1} + θ η_{t−1} + η_t` scaled so that `Var ε_t = σ²`.
    Arma { psi: f64, theta: f64 },
}

impl ErrorKind {
    pub const SERIAL: ErrorKind = ErrorKind::Arma { psi: 0.5, theta: 0.5 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub phi1: f64,
    pub phi2: f64,
    #[serde(rename = "T")]
    pub t_len: usize,
    /// Last period (1-based) of the first regime.
    pub break_at: usize,
    pub error_kind: ErrorKind,
    pub seed: u64,
}

/// Rows 1..=8: `(σ, c₁, c₂, φ₁, φ₂)`.
const TABLE: [(f64, f64, f64, f64, f64); 8] = [
    (1.0, 0.1, 0.2, 1.0, 1.0),
    (1.0, 0.1, 1.0, 1.0, 1.0),
    (1.0, 0.1, 1.0, 0.95, 0.95),
    (1.0, 0.1, 1.0, 0.95, 1.0),
    (1.0, 0.1, 1.0, 0.5, 1.0),
    (1.0, 1.0, 1.0, 1.0, 1.0),
    (0.5, 0.1, 1.0, 1.0, 1.0),
    (1.0, 0.1, 1.0, 0.5, 0.5),
];

/// Rows with serially correlated variants.
pub const SERIAL_ROWS: [usize; 6] = [2, 3, 4, 5, 7, 8];

impl DgpConfig {
    /// Row `id` of the design table with `T = 500` and the break at 250.
    pub fn table(id: usize, serial: bool) -> Result<Self> {
        let &(sigma, c1, c2, phi1, phi2) = TABLE
            .get(id.wrapping_sub(1))
            .ok_or_else(|| Error::InvalidArgument(format!("no DGP {id}; rows are 1..=8")))?;
        if serial && !SERIAL_ROWS.contains(&id) {
            return Err(Error::InvalidArgument(format!("DGP {id} has no serially correlated variant")));
        }
        Ok(DgpConfig {
            sigma,
            c1,
            c2,
            phi1,
            phi2,
            t_len: 500,
            break_at: 250,
            error_kind: if serial { ErrorKind::SERIAL } else { ErrorKind::Iid },
            seed: 0,
        })
    }

    /// Parses `"5"` or `"5_s"`.
    pub fn from_id(id: &str) -> Result<Self> {
        let (row, serial) = match id.strip_suffix("_s") {
            Some(r) => (r, true),
            None => (id, false),
        };
        let row: usize = row
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad DGP id `{id}`")))?;
        Self::table(row, serial)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        DgpConfig { seed, ..self.clone() }
    }

    pub fn has_break(&self) -> bool {
        self.c1 != self.c2 || self.phi1 != self.phi2
    }

    /// 0-based index of the last observation of the first regime.
    pub fn true_break_index(&self) -> usize {
        self.break_at - 1
    }

    /// Innovation variance `σ_η²` of the ARMA error, or `σ²`.
    pub fn innovation_variance(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        match self.error_kind {
            ErrorKind::Iid => s2,
            ErrorKind::Arma { psi, theta } => {
                s2 * (1.0 - psi * psi) / (1.0 + theta * theta + 2.0 * psi * theta)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument("sigma must be finite and non-negative".into()));
        }
        if !(0 < self.break_at && self.break_at < self.t_len) {
            return Err(Error::InvalidArgument(format!(
                "break_at {} outside 1..{}",
                self.break_at, self.t_len
            )));
        }
        if let ErrorKind::Arma { psi, .. } = self.error_kind {
            if !(psi.abs() < 1.0) {
                return Err(Error::InvalidArgument("ARMA error needs |psi| < 1".into()));
            }
        }
        if !(self.innovation_variance() >= 0.0) {
            return Err(Error::InvalidArgument("negative innovation variance".into()));
        }
        Ok(())
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Errors `ε_1..ε_T` for `dgp` drawn from `rng`.
pub fn errors<R: Rng>(dgp: &DgpConfig, rng: &mut R) -> Vec<f64> {
    let n = dgp.t_len;
    match dgp.error_kind {
        ErrorKind::Iid => (0..n).map(|_| dgp.sigma * normal(rng)).collect(),
        ErrorKind::Arma { psi, theta } => {
            let s_eta = dgp.innovation_variance().sqrt();
            let rest = (dgp.sigma * dgp.sigma - s_eta * s_eta).max(0.0).sqrt();
            let mut eta_prev = s_eta * normal(rng);
            let mut eps_prev = eta_prev + rest * normal(rng);
            (0..n)
                .map(|_| {
                    let eta = s_eta * normal(rng);
                    let eps = psi * eps_prev + theta * eta_prev + eta;
                    eta_prev = eta;
                    eps_prev = eps;
                    eps
                })
                .collect()
        }
    }
}

/// `y_1..y_T` with `y_0 = 0`, drawn from a generator seeded by `dgp.seed`.
pub fn generate(dgp: &DgpConfig) -> Result<Vec<f64>> {
    dgp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(dgp.seed);
    let eps = errors(dgp, &mut rng);
    let mut prev = 0.0;
    Ok(eps
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (c, phi) = if i < dgp.break_at {
                (dgp.c1, dgp.phi1)
            } else {
                (dgp.c2, dgp.phi2)
            };
            prev = c + phi * prev + e;
            prev
        })
        .collect())
}
