//! Global least-squares break estimation.
//!
//! For pure structural change (regime mean, regime AR) one Bellman pass
//! over the segment costs yields the optimal partition for every break
//! count up to the maximum. For the common-AR model the break locations and
//! the shared slope are estimated alternately: a DP pass on `y_t − φ y_{t−1}`
//! followed by joint least squares of `(φ, c_1..c_{m+1})` given the breaks,
//! repeated until the SSR settles.

use serde::{Deserialize, Serialize};

use crate::binning::BinnedSeries;
use crate::error::{Error, Result};
use crate::regression::{
    common_ar_fit, fit_one, pooled_phi, segments, Design, GlobalCoefficients, ModelKind, ModelSpec,
    SegmentCost, SegmentFit,
};

/// Cap on the number of breaks searched by default.
pub const MAX_BREAKS_CAP: usize = 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakFit {
    pub spec: ModelSpec,
    pub m: usize,
    /// Original-series index of the last observation of each earlier regime.
    pub break_indices: Vec<usize>,
    /// Ages (Ma) of `break_indices`; empty when the series has no age axis.
    pub break_ages: Vec<f64>,
    pub segment_fits: Vec<SegmentFit>,
    pub beta: GlobalCoefficients,
    pub total_ssr: f64,
    /// Number of observations in the estimation sample.
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl BreakFit {
    pub fn label_ages(&mut self, binned: &BinnedSeries) {
        self.break_ages = self
            .break_indices
            .iter()
            .map(|&i| binned.age_at(i as f64))
            .collect();
    }
}

/// Optimal SSR and partition for each break count `0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsrByM {
    pub optimal_ssr: Vec<f64>,
    /// Break indices per `m`, on the index scale of the cost source.
    pub optimal_breaks: Vec<Vec<usize>>,
}

impl SsrByM {
    pub fn max_breaks(&self) -> usize {
        self.optimal_ssr.len().saturating_sub(1)
    }

    pub fn from_fits(fits: &[BreakFit]) -> Result<Self> {
        for (m, f) in fits.iter().enumerate() {
            if f.m != m {
                return Err(Error::InvalidArgument(
                    "fits must cover m = 0, 1, 2, … in order".into(),
                ));
            }
        }
        Ok(SsrByM {
            optimal_ssr: fits.iter().map(|f| f.total_ssr).collect(),
            optimal_breaks: fits.iter().map(|f| f.break_indices.clone()).collect(),
        })
    }

    fn shifted(mut self, offset: usize) -> Self {
        for b in &mut self.optimal_breaks {
            b.iter_mut().for_each(|i| *i += offset);
        }
        self
    }
}

/// Largest break count admitting `m + 1` regimes of `min_len` observations.
pub fn max_feasible_breaks(n: usize, min_len: usize) -> usize {
    (n / min_len.max(1)).saturating_sub(1)
}

/// Default search bound: every feasible count, capped at [`MAX_BREAKS_CAP`].
pub fn default_max_breaks(n: usize, min_len: usize) -> usize {
    max_feasible_breaks(n, min_len).min(MAX_BREAKS_CAP)
}

/// Bellman recursion over optimal `k`-break prefixes.
///
/// `best[k][j]` is the least SSR of observations `0..=j` split into `k + 1`
/// regimes of at least `min_len` observations. Segment costs are streamed
/// from each start, so memory is `O(M·T)`. Ties keep the earliest break.
pub fn dp_global_breaks<C: SegmentCost>(costs: &C, max_breaks: usize, min_len: usize) -> Result<SsrByM> {
    let n = costs.len();
    let min_len = min_len.max(1);
    let feasible = max_feasible_breaks(n, min_len);
    if n < min_len || max_breaks > feasible {
        return Err(Error::Infeasible {
            requested: max_breaks,
            max_feasible: feasible,
            len: n,
            min_len,
        });
    }

    let mut best = vec![vec![f64::INFINITY; n]; max_breaks + 1];
    let mut arg = vec![vec![usize::MAX; n]; max_breaks + 1];
    costs.scan_from(0, min_len, |j, s| best[0][j] = s);

    for k in 1..=max_breaks {
        let (done, rest) = best.split_at_mut(k);
        let prev = &done[k - 1];
        let cur = &mut rest[0];
        let arg_k = &mut arg[k];
        // last regime starts at `start`; earlier k regimes fill 0..start
        for start in (k * min_len)..=(n - min_len) {
            let base = prev[start - 1];
            if !base.is_finite() {
                continue;
            }
            costs.scan_from(start, min_len, |j, s| {
                let total = base + s;
                if total < cur[j] {
                    cur[j] = total;
                    arg_k[j] = start;
                }
            });
        }
    }

    let mut optimal_ssr = Vec::with_capacity(max_breaks + 1);
    let mut optimal_breaks = Vec::with_capacity(max_breaks + 1);
    for m in 0..=max_breaks {
        let total = best[m][n - 1];
        optimal_ssr.push(total);
        let mut breaks = Vec::with_capacity(m);
        if total.is_finite() {
            let mut end = n - 1;
            for k in (1..=m).rev() {
                let start = arg[k][end];
                breaks.push(start - 1);
                end = start - 1;
            }
            breaks.reverse();
        }
        optimal_breaks.push(breaks);
    }
    Ok(SsrByM {
        optimal_ssr,
        optimal_breaks,
    })
}

fn check_feasible(design: &Design, spec: &ModelSpec, m: usize) -> Result<()> {
    let n = design.len();
    let feasible = max_feasible_breaks(n, spec.min_segment_obs);
    if n < spec.min_segment_obs || m > feasible {
        return Err(Error::Infeasible {
            requested: m,
            max_feasible: feasible,
            len: n,
            min_len: spec.min_segment_obs,
        });
    }
    Ok(())
}

fn assemble(
    design: &Design,
    spec: &ModelSpec,
    usable_breaks: &[usize],
    beta: GlobalCoefficients,
    converged: bool,
    iterations: usize,
) -> Result<BreakFit> {
    let segment_fits = segments(usable_breaks, design.len())
        .into_iter()
        .map(|(s, e)| fit_one(design, &beta, s, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(BreakFit {
        spec: spec.clone(),
        m: usable_breaks.len(),
        break_indices: usable_breaks.iter().map(|b| b + design.offset).collect(),
        break_ages: Vec::new(),
        total_ssr: segment_fits.iter().map(|f| f.ssr).sum(),
        segment_fits,
        beta,
        n_obs: design.len(),
        converged,
        iterations,
    })
}

struct ArIterate {
    breaks: Vec<usize>,
    phi: f64,
    ssr: f64,
    converged: bool,
    iterations: usize,
}

/// Alternating estimation of breaks and the common slope for `m` breaks.
fn iterate_common_ar(design: &Design, spec: &ModelSpec, m: usize, phi0: f64) -> Result<ArIterate> {
    if m == 0 {
        let (phi, _, ssr) = common_ar_fit(design, &[])?;
        return Ok(ArIterate {
            breaks: vec![],
            phi,
            ssr,
            converged: true,
            iterations: 1,
        });
    }
    let cfg = spec.iteration;
    let mut phi = phi0;
    let mut best: Option<ArIterate> = None;
    let mut prev_ssr = f64::INFINITY;
    for it in 1..=cfg.max_iter.max(1) {
        let costs = design.costs(&GlobalCoefficients::phi(phi));
        let path = dp_global_breaks(&costs, m, spec.min_segment_obs)?;
        let breaks = path.optimal_breaks[m].clone();
        if !path.optimal_ssr[m].is_finite() {
            return Err(Error::Singular("no admissible partition".into()));
        }
        let (new_phi, _, ssr) = common_ar_fit(design, &breaks)?;
        let settled = prev_ssr.is_finite()
            && (prev_ssr - ssr).abs() <= cfg.tol * prev_ssr.abs().max(f64::MIN_POSITIVE);
        let improves = best.as_ref().map_or(true, |b| ssr < b.ssr);
        if improves {
            best = Some(ArIterate {
                breaks,
                phi: new_phi,
                ssr,
                converged: false,
                iterations: it,
            });
        }
        if settled {
            let mut out = best.expect("at least one iterate");
            out.converged = true;
            out.iterations = it;
            return Ok(out);
        }
        prev_ssr = ssr;
        phi = new_phi;
    }
    let mut out = best.expect("at least one iterate");
    out.iterations = cfg.max_iter;
    Ok(out)
}

fn fit_common_ar(design: &Design, spec: &ModelSpec, it: ArIterate) -> Result<BreakFit> {
    let mut fit = assemble(
        design,
        spec,
        &it.breaks,
        GlobalCoefficients::phi(it.phi),
        it.converged,
        it.iterations,
    )?;
    fit.total_ssr = it.ssr;
    Ok(fit)
}

/// Least-squares estimate of `m` breaks in `y`.
pub fn estimate(y: &[f64], spec: &ModelSpec, m: usize) -> Result<BreakFit> {
    let design = Design::new(y, spec.kind)?;
    check_feasible(&design, spec, m)?;
    match spec.kind {
        ModelKind::FixedAr => {
            let phi0 = pooled_phi(&design)?;
            let it = iterate_common_ar(&design, spec, m, phi0)?;
            fit_common_ar(&design, spec, it)
        }
        _ => {
            let path = dp_global_breaks(&design.costs(&GlobalCoefficients::none()), m, spec.min_segment_obs)?;
            if !path.optimal_ssr[m].is_finite() {
                return Err(Error::Singular("no admissible partition".into()));
            }
            assemble(&design, spec, &path.optimal_breaks[m], GlobalCoefficients::none(), true, 1)
        }
    }
}

/// [`estimate`] on a binned series, with break ages attached.
pub fn estimate_binned(series: &BinnedSeries, spec: &ModelSpec, m: usize) -> Result<BreakFit> {
    let mut fit = estimate(&series.values, spec, m)?;
    fit.label_ages(series);
    Ok(fit)
}

/// One fit per break count in `m_range`.
///
/// For the common-AR model each count runs its own alternating iteration,
/// started both from the pooled slope and from the converged slope of the
/// previous count; the lower-SSR result is kept. The warm start makes the
/// optimal SSR non-increasing in `m`.
pub fn estimate_path(
    y: &[f64],
    spec: &ModelSpec,
    m_range: std::ops::RangeInclusive<usize>,
) -> Result<Vec<BreakFit>> {
    let design = Design::new(y, spec.kind)?;
    let m_max = *m_range.end();
    check_feasible(&design, spec, m_max)?;
    match spec.kind {
        ModelKind::FixedAr => {
            let phi0 = pooled_phi(&design)?;
            let mut out = Vec::new();
            let mut warm: Option<f64> = None;
            for m in 0..=m_max {
                let mut it = iterate_common_ar(&design, spec, m, phi0)?;
                if let Some(phi) = warm.filter(|_| m > 1) {
                    let alt = iterate_common_ar(&design, spec, m, phi)?;
                    if alt.ssr < it.ssr {
                        it = alt;
                    }
                }
                warm = Some(it.phi);
                if m_range.contains(&m) {
                    out.push(fit_common_ar(&design, spec, it)?);
                }
            }
            Ok(out)
        }
        _ => {
            let path = dp_global_breaks(
                &design.costs(&GlobalCoefficients::none()),
                m_max,
                spec.min_segment_obs,
            )?;
            m_range
                .map(|m| {
                    if !path.optimal_ssr[m].is_finite() {
                        return Err(Error::Singular("no admissible partition".into()));
                    }
                    assemble(&design, spec, &path.optimal_breaks[m], GlobalCoefficients::none(), true, 1)
                })
                .collect()
        }
    }
}

/// Optimal SSR for every `m` in `0..=m_max`, on original indices.
pub fn ssr_path(y: &[f64], spec: &ModelSpec, m_max: usize) -> Result<SsrByM> {
    match spec.kind {
        ModelKind::FixedAr => SsrByM::from_fits(&estimate_path(y, spec, 0..=m_max)?),
        _ => {
            let design = Design::new(y, spec.kind)?;
            check_feasible(&design, spec, m_max)?;
            Ok(dp_global_breaks(
                &design.costs(&GlobalCoefficients::none()),
                m_max,
                spec.min_segment_obs,
            )?
            .shifted(design.offset))
        }
    }
}
