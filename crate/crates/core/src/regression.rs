//! Segment-wise least squares for the three regression specifications.
//!
//! Every specification has the form `y_t = x_t'β + z_t'δ_j + u_t` inside
//! regime `j`:
//!
//! | kind       | x_t       | z_t            | q | p |
//! |------------|-----------|----------------|---|---|
//! | `Mean`     | –         | 1              | 1 | 0 |
//! | `FixedAr`  | y_{t-1}   | 1              | 1 | 1 |
//! | `Ar`       | –         | (1, y_{t-1})   | 2 | 0 |
//!
//! Lag-using kinds drop the first observation; break indices always refer
//! to positions in the original series.
//!
//! Segment SSRs are produced by streaming accumulators that add one
//! observation at a time with centred (Welford) moment updates, so the full
//! triangle of segment costs takes O(T²) work and O(1) memory per start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hac::HacConfig;
use crate::linalg::MAX_CONDITION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Mean,
    FixedAr,
    Ar,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Mean, ModelKind::FixedAr, ModelKind::Ar];

    /// Number of regime-specific coefficients.
    pub fn q(self) -> usize {
        match self {
            ModelKind::Mean | ModelKind::FixedAr => 1,
            ModelKind::Ar => 2,
        }
    }

    /// Number of regime-invariant coefficients.
    pub fn p(self) -> usize {
        match self {
            ModelKind::FixedAr => 1,
            _ => 0,
        }
    }

    pub fn uses_lag(self) -> bool {
        !matches!(self, ModelKind::Mean)
    }

    /// First usable index of the original series.
    pub fn offset(self) -> usize {
        usize::from(self.uses_lag())
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mean => "mean",
            ModelKind::FixedAr => "fixed-ar",
            ModelKind::Ar => "ar",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mean" => Ok(ModelKind::Mean),
            "fixed-ar" | "fixedar" => Ok(ModelKind::FixedAr),
            "ar" => Ok(ModelKind::Ar),
            other => Err(Error::InvalidArgument(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Stopping rule for the alternating estimator of the common-AR model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    /// Relative SSR change below which the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Minimum number of observations in a regime.
    pub min_segment_obs: usize,
    /// Regime-specific error variances.
    pub hetero_variance: bool,
    pub hac: HacConfig,
    #[serde(default)]
    pub iteration: IterationConfig,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, min_segment_obs: usize) -> Result<Self> {
        if min_segment_obs < kind.q() || min_segment_obs == 0 {
            return Err(Error::InvalidArgument(format!(
                "minimum regime length {min_segment_obs} is below the {} regime coefficients of the {kind} model",
                kind.q()
            )));
        }
        Ok(ModelSpec {
            kind,
            min_segment_obs,
            hetero_variance: true,
            hac: HacConfig::default(),
            iteration: IterationConfig::default(),
        })
    }

    /// Spec whose minimum regime duration is `h_myr` million years on a grid
    /// of `bin_kyr`.
    pub fn from_duration(kind: ModelKind, h_myr: f64, bin_kyr: f64) -> Result<Self> {
        Self::new(kind, min_obs_from_duration(h_myr, bin_kyr)?)
    }
}

/// `round(h · 1000 / Δ)`: the minimum regime duration in bins.
pub fn min_obs_from_duration(h_myr: f64, bin_kyr: f64) -> Result<usize> {
    if !(h_myr > 0.0) || !(bin_kyr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration {h_myr} Myr and bin size {bin_kyr} kyr must be positive"
        )));
    }
    Ok((h_myr * 1000.0 / bin_kyr).round() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    /// First and last index (inclusive) in the original series.
    pub start: usize,
    pub end: usize,
    /// Regime coefficients: `[c_j]`, or `[c_j, φ_j]` for the AR model.
    pub delta: Vec<f64>,
    pub sigma2: f64,
    pub ssr: f64,
}

impl SegmentFit {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalCoefficients {
    /// `[φ]` for the common-AR model, empty otherwise.
    pub beta: Vec<f64>,
}

impl GlobalCoefficients {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn phi(phi: f64) -> Self {
        GlobalCoefficients { beta: vec![phi] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub y: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

/// Regression rows `(y_t, x_t, z_t)` over the usable sample.
pub fn design_rows(y: &[f64], kind: ModelKind) -> Result<Vec<DesignRow>> {
    let d = Design::new(y, kind)?;
    Ok((0..d.len())
        .map(|t| {
            let lag = d.lag.as_ref().map(|l| l[t]);
            match kind {
                ModelKind::Mean => DesignRow {
                    y: d.target[t],
                    x: vec![],
                    z: vec![1.0],
                },
                ModelKind::FixedAr => DesignRow {
                    y: d.target[t],
                    x: vec![lag.unwrap()],
                    z: vec![1.0],
                },
                ModelKind::Ar => DesignRow {
                    y: d.target[t],
                    x: vec![],
                    z: vec![1.0, lag.unwrap()],
                },
            }
        })
        .collect())
}

/// Response and lag columns of the usable sample.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub kind: ModelKind,
    pub target: Vec<f64>,
    pub lag: Option<Vec<f64>>,
    pub offset: usize,
}

impl Design {
    pub fn new(y: &[f64], kind: ModelKind) -> Result<Self> {
        let needed = if kind.uses_lag() { 2 } else { 1 };
        if y.len() < needed {
            return Err(Error::TooShort {
                needed,
                have: y.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at index {i}")));
        }
        let offset = kind.offset();
        Ok(Design {
            kind,
            target: y[offset..].to_vec(),
            lag: kind.uses_lag().then(|| y[..y.len() - 1].to_vec()),
            offset,
        })
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    /// `y_t − x_t'β` for the common-AR model; the plain response otherwise.
    pub fn adjusted(&self, beta: &GlobalCoefficients) -> Vec<f64> {
        match (self.kind, beta.beta.first(), &self.lag) {
            (ModelKind::FixedAr, Some(&phi), Some(lag)) => self
                .target
                .iter()
                .zip(lag)
                .map(|(y, x)| y - phi * x)
                .collect(),
            _ => self.target.clone(),
        }
    }

    /// Segment costs with `β` held fixed.
    pub fn costs(&self, beta: &GlobalCoefficients) -> KernelCost {
        match self.kind {
            ModelKind::Ar => KernelCost::Ar {
                x: self.lag.clone().expect("AR design has a lag"),
                y: self.target.clone(),
            },
            _ => KernelCost::Mean(self.adjusted(beta)),
        }
    }
}

/// Running mean and centred sum of squares.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct MeanAcc {
    n: f64,
    mean: f64,
    m2: f64,
}

impl MeanAcc {
    #[inline]
    pub fn push(&mut self, w: f64) {
        self.n += 1.0;
        let d = w - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (w - self.mean);
    }

    #[inline]
    pub fn ssr(&self) -> f64 {
        self.m2.max(0.0)
    }
}

/// Running centred co-moments of `(x, y)` for a regression on `(1, x)`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ArAcc {
    n: f64,
    mx: f64,
    my: f64,
    cxx: f64,
    cxy: f64,
    cyy: f64,
}

impl ArAcc {
    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mx;
        let dy = y - self.my;
        self.mx += dx / self.n;
        self.my += dy / self.n;
        self.cxx += dx * (x - self.mx);
        self.cxy += dx * (y - self.my);
        self.cyy += dy * (y - self.my);
    }

    /// Whether the moment matrix of `(1, x)` is too ill-conditioned.
    #[inline]
    pub fn degenerate(&self) -> bool {
        if self.n < 2.0 || !(self.cxx > 0.0) {
            return true;
        }
        let sxx = self.cxx + self.n * self.mx * self.mx;
        let tr = self.n + sxx;
        let det = self.n * self.cxx;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let lmax = 0.5 * (tr + disc);
        let lmin = det / lmax;
        lmax / lmin > MAX_CONDITION
    }

    #[inline]
    pub fn ssr(&self) -> f64 {
        if self.degenerate() {
            f64::INFINITY
        } else {
            (self.cyy - self.cxy * self.cxy / self.cxx).max(0.0)
        }
    }
}

/// Source of segment SSRs indexed over the usable sample.
pub trait SegmentCost {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(end, ssr)` for every `end` with `end − start + 1 ≥ min_len`,
    /// in increasing order of `end`.
    fn scan_from<F: FnMut(usize, f64)>(&self, start: usize, min_len: usize, f: F);

    fn ssr(&self, start: usize, end: usize) -> f64 {
        let mut out = f64::INFINITY;
        self.scan_from(start, end + 1 - start, |j, s| {
            if j == end {
                out = s;
            }
        });
        out
    }
}

/// Streaming segment costs computed on the fly.
#[derive(Debug, Clone)]
pub enum KernelCost {
    /// Regression of the (possibly β-adjusted) response on a constant.
    Mean(Vec<f64>),
    /// Regression of `y` on `(1, x)`.
    Ar { x: Vec<f64>, y: Vec<f64> },
}

impl SegmentCost for KernelCost {
    fn len(&self) -> usize {
        match self {
            KernelCost::Mean(w) => w.len(),
            KernelCost::Ar { y, .. } => y.len(),
        }
    }

    fn scan_from<F: FnMut(usize, f64)>(&self, start: usize, min_len: usize, mut f: F) {
        let min_len = min_len.max(1);
        match self {
            KernelCost::Mean(w) => {
                let mut acc = MeanAcc::default();
                for (j, &v) in w.iter().enumerate().skip(start) {
                    acc.push(v);
                    if j + 1 - start >= min_len {
                        f(j, acc.ssr());
                    }
                }
            }
            KernelCost::Ar { x, y } => {
                let mut acc = ArAcc::default();
                for j in start..y.len() {
                    acc.push(x[j], y[j]);
                    if j + 1 - start >= min_len {
                        f(j, acc.ssr());
                    }
                }
            }
        }
    }
}

/// Upper-triangular table of segment SSRs over the usable sample;
/// `+∞` marks segments shorter than `q` or with a singular moment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SsrTable {
    rows: Vec<Vec<f64>>,
    /// Original-series index of usable observation 0.
    pub offset: usize,
}

impl SsrTable {
    pub fn from_costs<C: SegmentCost>(costs: &C, q: usize, offset: usize) -> Self {
        let n = costs.len();
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![f64::INFINITY; n - i];
                costs.scan_from(i, q, |j, s| row[j - i] = s);
                row
            })
            .collect();
        SsrTable { rows, offset }
    }

    /// SSR of usable observations `start..=end`.
    pub fn get(&self, start: usize, end: usize) -> f64 {
        self.rows[start][end - start]
    }
}

impl SegmentCost for SsrTable {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn scan_from<F: FnMut(usize, f64)>(&self, start: usize, min_len: usize, mut f: F) {
        let min_len = min_len.max(1);
        for (k, &s) in self.rows[start].iter().enumerate().skip(min_len - 1) {
            f(start + k, s);
        }
    }

    fn ssr(&self, start: usize, end: usize) -> f64 {
        self.get(start, end)
    }
}

/// SSR of every admissible segment with `β` held fixed.
pub fn segment_ssr_table(y: &[f64], spec: &ModelSpec, beta: &GlobalCoefficients) -> Result<SsrTable> {
    let design = Design::new(y, spec.kind)?;
    Ok(SsrTable::from_costs(
        &design.costs(beta),
        spec.kind.q(),
        design.offset,
    ))
}

/// Splits the usable sample `0..n` at `breaks` (usable-sample indices of
/// the last observation of each earlier regime).
pub(crate) fn segments(breaks: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(breaks.len() + 1);
    let mut start = 0;
    for &b in breaks {
        out.push((start, b));
        start = b + 1;
    }
    out.push((start, n - 1));
    out
}

pub(crate) fn to_usable(breaks: &[usize], offset: usize, n: usize, min_len: usize) -> Result<Vec<usize>> {
    let mut prev: Option<usize> = None;
    let mut out = Vec::with_capacity(breaks.len());
    for &b in breaks {
        if b < offset || b - offset + 1 >= n {
            return Err(Error::InvalidArgument(format!("break {b} outside the usable sample")));
        }
        if prev.is_some_and(|p| b <= p) {
            return Err(Error::InvalidArgument("breaks must be strictly increasing".into()));
        }
        prev = Some(b);
        out.push(b - offset);
    }
    for (s, e) in segments(&out, n) {
        if e + 1 - s < min_len {
            return Err(Error::InvalidArgument(format!(
                "regime [{}, {}] shorter than {min_len} observations",
                s + offset,
                e + offset
            )));
        }
    }
    Ok(out)
}

/// Two-pass OLS of one usable segment.
pub(crate) fn fit_one(design: &Design, beta: &GlobalCoefficients, start: usize, end: usize) -> Result<SegmentFit> {
    let n = end + 1 - start;
    let q = design.kind.q();
    let (delta, ssr) = match design.kind {
        ModelKind::Ar => {
            let lag = design.lag.as_ref().expect("AR design has a lag");
            let xs = &lag[start..=end];
            let ys = &design.target[start..=end];
            let mx = xs.iter().sum::<f64>() / n as f64;
            let my = ys.iter().sum::<f64>() / n as f64;
            let mut acc = ArAcc::default();
            xs.iter().zip(ys).for_each(|(x, y)| acc.push(*x, *y));
            if acc.degenerate() {
                return Err(Error::Singular(format!(
                    "regime [{}, {}] has a degenerate lag",
                    start + design.offset,
                    end + design.offset
                )));
            }
            let (mut sxx, mut sxy) = (0.0, 0.0);
            for (x, y) in xs.iter().zip(ys) {
                sxx += (x - mx) * (x - mx);
                sxy += (x - mx) * (y - my);
            }
            let phi = sxy / sxx;
            let c = my - phi * mx;
            let ssr: f64 = xs
                .iter()
                .zip(ys)
                .map(|(x, y)| (y - c - phi * x).powi(2))
                .sum();
            (vec![c, phi], ssr)
        }
        _ => {
            let w = &design.adjusted(beta)[start..=end];
            let c = w.iter().sum::<f64>() / n as f64;
            let ssr: f64 = w.iter().map(|v| (v - c).powi(2)).sum();
            (vec![c], ssr)
        }
    };
    let dof = n.saturating_sub(q);
    Ok(SegmentFit {
        start: start + design.offset,
        end: end + design.offset,
        delta,
        sigma2: if dof > 0 { ssr / dof as f64 } else { 0.0 },
        ssr,
    })
}

/// Per-regime coefficients, variances and SSRs for a given partition with
/// `β` held fixed. `breaks` are original-series indices of the last
/// observation of each earlier regime. Returns the fits and their total SSR.
pub fn fit_segments(
    y: &[f64],
    spec: &ModelSpec,
    breaks: &[usize],
    beta: &GlobalCoefficients,
) -> Result<(Vec<SegmentFit>, f64)> {
    let design = Design::new(y, spec.kind)?;
    let usable = to_usable(breaks, design.offset, design.len(), spec.min_segment_obs)?;
    let fits = segments(&usable, design.len())
        .into_iter()
        .map(|(s, e)| fit_one(&design, beta, s, e))
        .collect::<Result<Vec<_>>>()?;
    let total = fits.iter().map(|f| f.ssr).sum();
    Ok((fits, total))
}

/// Joint least squares of `y_t` on `y_{t−1}` and regime dummies for a fixed
/// partition (usable-sample breaks). Returns `(φ, c_j, SSR)`.
pub(crate) fn common_ar_fit(design: &Design, breaks: &[usize]) -> Result<(f64, Vec<f64>, f64)> {
    let lag = design.lag.as_ref().ok_or_else(|| {
        Error::InvalidArgument("common-AR fit needs a lagged regressor".into())
    })?;
    let y = &design.target;
    let segs = segments(breaks, design.len());
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut means = Vec::with_capacity(segs.len());
    for &(s, e) in &segs {
        let n = (e + 1 - s) as f64;
        let mx = lag[s..=e].iter().sum::<f64>() / n;
        let my = y[s..=e].iter().sum::<f64>() / n;
        for t in s..=e {
            sxx += (lag[t] - mx) * (lag[t] - mx);
            sxy += (lag[t] - mx) * (y[t] - my);
        }
        means.push((mx, my));
    }
    let scale: f64 = lag.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if !(sxx > scale / MAX_CONDITION) {
        return Err(Error::Singular(
            "lagged series has no within-regime variation".into(),
        ));
    }
    let phi = sxy / sxx;
    let cs: Vec<f64> = means.iter().map(|(mx, my)| my - phi * mx).collect();
    let mut ssr = 0.0;
    for (&(s, e), c) in segs.iter().zip(&cs) {
        for t in s..=e {
            ssr += (y[t] - c - phi * lag[t]).powi(2);
        }
    }
    Ok((phi, cs, ssr))
}

/// Full-sample OLS slope of `y_t` on `(1, y_{t−1})`.
pub(crate) fn pooled_phi(design: &Design) -> Result<f64> {
    common_ar_fit(design, &[]).map(|(phi, _, _)| phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(kind: ModelKind) -> ModelSpec {
        ModelSpec::new(kind, kind.q()).unwrap()
    }

    #[test]
    fn design_shapes() {
        let rows = design_rows(&[1.0, 2.0, 3.0], ModelKind::Mean).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.z == vec![1.0] && r.x.is_empty()));
        let rows = design_rows(&[1.0, 2.0, 3.0], ModelKind::Ar).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].z, vec![1.0, 1.0]);
        assert_eq!(rows[1].z, vec![1.0, 2.0]);
        assert_eq!(rows[1].y, 3.0);
        let rows = design_rows(&[1.0, 2.0, 3.0], ModelKind::FixedAr).unwrap();
        assert_eq!(rows[0].x, vec![1.0]);
        assert!(design_rows(&[1.0], ModelKind::Ar).is_err());
    }

    #[test]
    fn two_point_mean_ssr() {
        let t = segment_ssr_table(&[5.0, 5.0, 5.0], &spec(ModelKind::Mean), &GlobalCoefficients::none()).unwrap();
        assert_eq!(t.get(0, 2), 0.0);
        let t = segment_ssr_table(&[0.0, 1.0], &spec(ModelKind::Mean), &GlobalCoefficients::none()).unwrap();
        assert!((t.get(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn min_length_validation() {
        assert!(ModelSpec::new(ModelKind::Ar, 1).is_err());
        assert!(ModelSpec::new(ModelKind::Mean, 0).is_err());
        assert_eq!(min_obs_from_duration(2.5, 25.0).unwrap(), 100);
        assert_eq!(min_obs_from_duration(1.0, 25.0).unwrap(), 40);
    }

    /// Independent per-segment OLS by solving the normal equations directly.
    fn brute_ssr(rows: &[DesignRow], s: usize, e: usize, beta: f64) -> Option<f64> {
        let n = e + 1 - s;
        let q = rows[0].z.len();
        if n < q {
            return None;
        }
        let z = DMatrix::from_fn(n, q, |i, j| rows[s + i].z[j]);
        let w = DVector::from_fn(n, |i, _| {
            rows[s + i].y - rows[s + i].x.first().map(|x| x * beta).unwrap_or(0.0)
        });
        let ztz = z.transpose() * &z;
        let sol = ztz.clone().lu().solve(&(z.transpose() * &w))?;
        let eig = ztz.symmetric_eigen().eigenvalues;
        if eig.min() <= 1e-12 * eig.max() {
            return None;
        }
        Some((w - z * sol).norm_squared())
    }

    #[test]
    fn table_matches_direct_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: Vec<f64> = (0..15).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for (kind, beta) in [(ModelKind::Mean, 0.0), (ModelKind::Ar, 0.0), (ModelKind::FixedAr, 0.4)] {
            let b = if kind == ModelKind::FixedAr {
                GlobalCoefficients::phi(beta)
            } else {
                GlobalCoefficients::none()
            };
            let table = segment_ssr_table(&y, &spec(kind), &b).unwrap();
            let rows = design_rows(&y, kind).unwrap();
            for s in 0..rows.len() {
                for e in s..rows.len() {
                    let got = table.get(s, e);
                    match brute_ssr(&rows, s, e, beta) {
                        Some(want) => {
                            // two-point AR segments fit exactly
                            let tol = 1e-10 * want.max(1e-3);
                            assert!((got - want).abs() <= tol, "{kind} [{s},{e}]: {got} vs {want}");
                        }
                        None => assert!(got.is_infinite() || got < 1e-12),
                    }
                }
            }
        }
    }

    #[test]
    fn fit_two_means() {
        let (fits, ssr) = fit_segments(&[1.0, 1.0, 2.0, 2.0], &spec(ModelKind::Mean), &[1], &GlobalCoefficients::none()).unwrap();
        assert_eq!(fits[0].delta, vec![1.0]);
        assert_eq!(fits[1].delta, vec![2.0]);
        assert_eq!(ssr, 0.0);
        assert_eq!((fits[1].start, fits[1].end), (2, 3));
    }

    #[test]
    fn fit_rejects_bad_breaks() {
        let s = spec(ModelKind::Mean);
        let y = [1.0, 2.0, 3.0, 4.0];
        let none = GlobalCoefficients::none();
        assert!(fit_segments(&y, &s, &[2, 1], &none).is_err());
        assert!(fit_segments(&y, &s, &[3], &none).is_err());
        let s2 = ModelSpec::new(ModelKind::Mean, 2).unwrap();
        assert!(fit_segments(&y, &s2, &[0], &none).is_err());
    }

    #[test]
    fn ar_degenerate_segment_is_infinite() {
        let y = [3.0; 6];
        let t = segment_ssr_table(&y, &spec(ModelKind::Ar), &GlobalCoefficients::none()).unwrap();
        assert!(t.get(0, 4).is_infinite());
    }

    #[test]
    fn common_ar_recovers_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut y = vec![0.0];
        for t in 1..400 {
            let c = if t < 200 { 1.0 } else { 3.0 };
            let prev = y[t - 1];
            y.push(c + 0.5 * prev + 0.1 * rng.gen_range(-1.0..1.0));
        }
        let d = Design::new(&y, ModelKind::FixedAr).unwrap();
        let (phi, cs, _) = common_ar_fit(&d, &[198]).unwrap();
        assert!((phi - 0.5).abs() < 0.02, "{phi}");
        assert!((cs[0] - 1.0).abs() < 0.05 && (cs[1] - 3.0).abs() < 0.1);
    }

    #[test]
    fn zero_phi_matches_mean_on_lag_shifted_sample() {
        let y = [0.3, 1.2, -0.4, 2.2, 0.9, 1.7];
        let mean_tab = segment_ssr_table(&y[1..], &spec(ModelKind::Mean), &GlobalCoefficients::none()).unwrap();
        let fixed_tab = segment_ssr_table(&y, &spec(ModelKind::FixedAr), &GlobalCoefficients::phi(0.0)).unwrap();
        for s in 0..5 {
            for e in s..5 {
                assert_eq!(mean_tab.get(s, e), fixed_tab.get(s, e));
            }
        }
    }
}
