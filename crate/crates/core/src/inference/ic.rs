//! Information criteria for the number of breaks.

use serde::{Deserialize, Serialize};

use crate::engine::SsrByM;
use crate::error::{Error, Result};
use crate::regression::ModelKind;

const LWZ_C0: f64 = 0.299;
const LWZ_DELTA0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bic,
    Lwz,
    Kt,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Bic, Criterion::Lwz, Criterion::Kt];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Bic => "bic",
            Criterion::Lwz => "lwz",
            Criterion::Kt => "kt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcRow {
    pub m: usize,
    pub ssr: f64,
    /// Estimated coefficients including break dates.
    pub n_params: usize,
    pub bic: f64,
    pub lwz: f64,
    pub kt: f64,
}

impl IcRow {
    pub fn value(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Bic => self.bic,
            Criterion::Lwz => self.lwz,
            Criterion::Kt => self.kt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcTable {
    pub n_obs: usize,
    pub rows: Vec<IcRow>,
    pub selected_bic: usize,
    pub selected_lwz: usize,
    pub selected_kt: usize,
}

impl IcTable {
    pub fn selected(&self, c: Criterion) -> usize {
        match c {
            Criterion::Bic => self.selected_bic,
            Criterion::Lwz => self.selected_lwz,
            Criterion::Kt => self.selected_kt,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["m", "ssr", "bic", "lwz", "kt"])?;
        for r in &self.rows {
            w.write_record([
                r.m.to_string(),
                r.ssr.to_string(),
                r.bic.to_string(),
                r.lwz.to_string(),
                r.kt.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<ic table>", e))?;
        Ok(())
    }
}

/// `(m + 1)·q + p + m`.
pub fn n_params(kind: ModelKind, m: usize) -> usize {
    (m + 1) * kind.q() + kind.p() + m
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// BIC, LWZ and KT for every `m` of `ssr_by_m`, on an estimation sample of
/// `n_obs` observations. Ties resolve to the smallest `m`.
pub fn information_criteria(ssr_by_m: &SsrByM, n_obs: usize, kind: ModelKind) -> Result<IcTable> {
    if ssr_by_m.optimal_ssr.is_empty() {
        return Err(Error::InvalidArgument("empty SSR path".into()));
    }
    let t = n_obs as f64;
    let ln_t = t.ln();
    let offset = kind.offset();
    let last = offset + n_obs - 1;
    let q = kind.q() as f64;
    let p = kind.p() as f64;
    let rows: Vec<IcRow> = ssr_by_m
        .optimal_ssr
        .iter()
        .enumerate()
        .map(|(m, &ssr)| {
            let k = n_params(kind, m);
            let kf = k as f64;
            let bic = (ssr / t).ln() + kf * ln_t / t;
            let lwz = if k < n_obs {
                (ssr / (t - kf)).ln() + kf * LWZ_C0 * ln_t.powf(2.0 + LWZ_DELTA0) / t
            } else {
                f64::INFINITY
            };
            let mut lens = 0.0;
            let mut prev = offset as f64 - 1.0;
            for &b in ssr_by_m.optimal_breaks[m].iter().chain(std::iter::once(&last)) {
                lens += (b as f64 - prev).ln();
                prev = b as f64;
            }
            let kt = (ssr / t).ln() + (p * ln_t + q * lens + 3.0 * m as f64 * ln_t) / t;
            IcRow {
                m,
                ssr,
                n_params: k,
                bic,
                lwz,
                kt,
            }
        })
        .collect();
    Ok(IcTable {
        n_obs,
        selected_bic: argmin(rows.iter().map(|r| r.bic)),
        selected_lwz: argmin(rows.iter().map(|r| r.lwz)),
        selected_kt: argmin(rows.iter().map(|r| r.kt)),
        rows,
    })
}
