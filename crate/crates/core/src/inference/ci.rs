//! Break-date confidence intervals from the limiting argmax distribution.
//!
//! With `Δ` the change in regime coefficients at a break, `Q_i` the regime
//! second-moment matrices of `z_t` and `Ω_i` the regime long-run variances of
//! `z_t u_t`, the scaled estimation error `a·(T̂ − T₀)` with
//! `a = (Δ'Q₁Δ)² / Δ'Ω₁Δ` converges to the argmax of a two-sided Brownian
//! motion with triangular drift whose right arm is rescaled by the regime
//! ratios. Its CDF has a closed form, inverted here by bisection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::binning::BinnedSeries;
use crate::engine::BreakFit;
use crate::error::{Error, Result};
use crate::hac::hac_covariance;
use crate::regression::{design_rows, DesignRow, ModelKind};

/// Relative size of `Δ'QΔ` below which a coefficient change is treated as
/// vanishing.
const VANISHING: f64 = 1e-12;
const BISECT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiStatus {
    Bounded,
    /// No coefficient change at the break; the interval is unbounded.
    VanishingChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakCI {
    pub break_index: usize,
    pub level: f64,
    /// Index bounds (inclusive), clamped to the series.
    pub lower_index: Option<usize>,
    pub upper_index: Option<usize>,
    /// Older and younger age bounds (Ma) when the series carries ages.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub status: CiStatus,
    /// Scale `a` of the limit law, in inverse observations.
    pub scale: f64,
    pub params: LimitLaw,
}

impl BreakCI {
    pub fn contains_index(&self, idx: usize) -> bool {
        match (self.lower_index, self.upper_index) {
            (Some(l), Some(u)) => l <= idx && idx <= u,
            _ => true,
        }
    }

    pub fn label_ages(&mut self, binned: &BinnedSeries) {
        if let (Some(l), Some(u)) = (self.lower_index, self.upper_index) {
            let a = binned.age_at(l as f64);
            let b = binned.age_at(u as f64);
            self.lower = Some(a.max(b));
            self.upper = Some(a.min(b));
        }
    }
}

/// Regime ratios of the limit law: `φ₁² = Δ'Ω₁Δ/Δ'Q₁Δ`,
/// `φ₂² = Δ'Ω₂Δ/Δ'Q₂Δ`, `ξ = Δ'Q₂Δ/Δ'Q₁Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub phi1_sq: f64,
    pub phi2_sq: f64,
    pub xi: f64,
}

impl LimitLaw {
    pub const SYMMETRIC: LimitLaw = LimitLaw {
        phi1_sq: 1.0,
        phi2_sq: 1.0,
        xi: 1.0,
    };

    /// CDF of `argmax_s { W₁(−s) − |s|/2 for s ≤ 0; √(ξφ₂²/φ₁²) W₂(s) − ξ s/2 for s > 0 }`.
    pub fn cdf(&self, x: f64) -> f64 {
        let r = self.phi1_sq / self.phi2_sq;
        let gam = (1.0 / r + 1.0) * self.xi / 2.0;
        let b = (self.phi1_sq * self.xi / self.phi2_sq).sqrt();
        let deld = (self.phi2_sq * self.xi / self.phi1_sq).sqrt() + b / 2.0;
        let alph = r * (1.0 + r) / 2.0;
        let bet = (1.0 + 2.0 * r) / 2.0;
        let v = if x <= 0.0 {
            let ax = -x;
            let sx = ax.sqrt();
            -(ax / (2.0 * std::f64::consts::PI)).sqrt() * (-ax / 8.0).exp()
                - (bet / alph) * (alph * ax + ln_norm_cdf(-bet * sx)).exp()
                + (2.0 * bet * bet / alph - 2.0 + ax / 2.0) * norm_cdf(-sx / 2.0)
        } else {
            let sx = x.sqrt();
            1.0 + b / (2.0 * std::f64::consts::PI).sqrt() * sx * (-b * b * x / 8.0).exp()
                + (b * deld / gam) * (gam * x + ln_norm_cdf(-deld * sx)).exp()
                + (2.0 - b * b * x / 2.0 - 2.0 * deld * deld / gam) * norm_cdf(-b * sx / 2.0)
        };
        v.clamp(0.0, 1.0)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let mut lo = -1.0;
        while self.cdf(lo) > p {
            lo *= 2.0;
        }
        let mut hi = 1.0;
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln Φ(x)`, using the asymptotic Mills ratio far in the lower tail.
pub(crate) fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return norm_cdf(x).ln();
    }
    let z2 = x * x;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    -z2 / 2.0 - (-x * (2.0 * std::f64::consts::PI).sqrt()).ln() + series.ln()
}

struct Regime {
    q: DMatrix<f64>,
    omega: DMatrix<f64>,
}

fn regime_moments(rows: &[DesignRow], resid: &[f64], fit: &BreakFit) -> Result<Regime> {
    let n = rows.len();
    let k = rows[0].z.len();
    let z = DMatrix::from_fn(n, k, |t, j| rows[t].z[j]);
    let scores = DMatrix::from_fn(n, k, |t, j| rows[t].z[j] * resid[t]);
    let omega = hac_covariance(&scores, &fit.spec.hac)?.covariance;
    Ok(Regime {
        q: z.transpose() * &z / n as f64,
        omega,
    })
}

fn quad(m: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    (d.transpose() * m * d)[(0, 0)]
}

/// Confidence intervals at `level` for every break of `fit`, estimated on `y`.
pub fn break_confidence_intervals(y: &[f64], fit: &BreakFit, level: f64) -> Result<Vec<BreakCI>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} outside (0, 1)")));
    }
    if fit.m == 0 {
        return Ok(Vec::new());
    }
    let kind = fit.spec.kind;
    let rows = design_rows(y, kind)?;
    let offset = kind.offset();
    let phi = fit.beta.beta.first().copied().unwrap_or(0.0);
    let resid: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(t, r)| {
            let seg = fit
                .segment_fits
                .iter()
                .find(|s| s.start <= t + offset && t + offset <= s.end)
                .expect("segments cover the sample");
            let zd: f64 = r.z.iter().zip(&seg.delta).map(|(a, b)| a * b).sum();
            let xb = if kind == ModelKind::FixedAr { phi * r.x[0] } else { 0.0 };
            r.y - zd - xb
        })
        .collect();

    let regimes = fit
        .segment_fits
        .iter()
        .map(|s| {
            let (a, b) = (s.start - offset, s.end - offset);
            regime_moments(&rows[a..=b], &resid[a..=b], fit)
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled = if fit.spec.hetero_variance {
        None
    } else {
        Some(regime_moments(&rows, &resid, fit)?)
    };

    let alpha = 1.0 - level;
    let last = y.len() - 1;
    let mut out = Vec::with_capacity(fit.m);
    for i in 0..fit.m {
        let (s1, s2) = (&fit.segment_fits[i], &fit.segment_fits[i + 1]);
        let delta = DVector::from_iterator(
            s1.delta.len(),
            s2.delta.iter().zip(&s1.delta).map(|(b, a)| b - a),
        );
        let (r1, r2) = match &pooled {
            Some(p) => (p, p),
            None => (&regimes[i], &regimes[i + 1]),
        };
        let dq1 = quad(&r1.q, &delta);
        let dq2 = quad(&r2.q, &delta);
        let do1 = quad(&r1.omega, &delta);
        let do2 = quad(&r2.omega, &delta);
        let scale_ref = r1.q.norm() * delta.norm_squared();
        let t_hat = fit.break_indices[i];
        if !(dq1 > VANISHING * scale_ref && do1 > 0.0 && do2 > 0.0 && dq2 > 0.0) {
            out.push(BreakCI {
                break_index: t_hat,
                level,
                lower_index: None,
                upper_index: None,
                lower: None,
                upper: None,
                status: CiStatus::VanishingChange,
                scale: 0.0,
                params: LimitLaw::SYMMETRIC,
            });
            continue;
        }
        let law = LimitLaw {
            phi1_sq: do1 / dq1,
            phi2_sq: do2 / dq2,
            xi: dq2 / dq1,
        };
        let a = dq1 * dq1 / do1;
        let q_lo = law.quantile(alpha / 2.0);
        let q_hi = law.quantile(1.0 - alpha / 2.0);
        let clamp = |v: f64| v.round().clamp(0.0, last as f64) as usize;
        out.push(BreakCI {
            break_index: t_hat,
            level,
            lower_index: Some(clamp(t_hat as f64 - q_hi / a)),
            upper_index: Some(clamp(t_hat as f64 - q_lo / a)),
            lower: None,
            upper: None,
            status: CiStatus::Bounded,
            scale: a,
            params: law,
        });
    }
    Ok(out)
}

/// [`break_confidence_intervals`] on a binned series, with age bounds.
pub fn binned_confidence_intervals(series: &BinnedSeries, fit: &BreakFit, level: f64) -> Result<Vec<BreakCI>> {
    let mut cis = break_confidence_intervals(&series.values, fit, level)?;
    cis.iter_mut().for_each(|c| c.label_ages(series));
    Ok(cis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::estimate;
    use crate::regression::ModelSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Discretised argmax of the two-sided drifted Brownian motion.
    fn mc_cdf(law: &LimitLaw, points: &[f64], reps: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let dt: f64 = 0.02;
        let steps = (120.0 / dt) as usize;
        let sd = dt.sqrt();
        let scale2 = (law.xi * law.phi2_sq / law.phi1_sq).sqrt();
        let mut counts = vec![0usize; points.len()];
        for _ in 0..reps {
            let (mut best, mut arg) = (0.0, 0.0);
            let mut w = 0.0;
            for k in 1..=steps {
                let e: f64 = StandardNormal.sample(&mut rng);
                w += sd * e;
                let s = k as f64 * dt;
                let v = w - s / 2.0;
                if v > best {
                    best = v;
                    arg = -s;
                }
            }
            let mut w = 0.0;
            for k in 1..=steps {
                let e: f64 = StandardNormal.sample(&mut rng);
                w += sd * e;
                let s = k as f64 * dt;
                let v = scale2 * w - law.xi * s / 2.0;
                if v > best {
                    best = v;
                    arg = s;
                }
            }
            for (c, &p) in counts.iter_mut().zip(points) {
                if arg <= p {
                    *c += 1;
                }
            }
        }
        counts.iter().map(|&c| c as f64 / reps as f64).collect()
    }

    #[test]
    fn cdf_shape() {
        for law in [
            LimitLaw::SYMMETRIC,
            LimitLaw { phi1_sq: 2.0, phi2_sq: 0.5, xi: 1.5 },
            LimitLaw { phi1_sq: 0.3, phi2_sq: 1.0, xi: 0.4 },
        ] {
            let mut prev = 0.0;
            for i in -400..=400 {
                let g = law.cdf(i as f64 * 0.5);
                assert!(g >= prev - 1e-12, "{law:?} at {i}");
                prev = g;
            }
            assert!(law.cdf(-500.0) < 1e-6);
            assert!(law.cdf(5000.0) > 1.0 - 1e-6);
            assert!(law.cdf(1e5).is_finite() && law.cdf(-1e5).is_finite());
        }
    }

    #[test]
    fn symmetric_law_quantiles() {
        let law = LimitLaw::SYMMETRIC;
        assert!((law.cdf(0.0) - 0.5).abs() < 1e-12);
        for x in [0.5, 2.0, 7.0, 15.0] {
            assert!((law.cdf(x) + law.cdf(-x) - 1.0).abs() < 1e-10);
        }
        let q = law.quantile(0.975);
        assert!((q - 11.03).abs() < 0.05, "{q}");
        assert!((law.quantile(0.025) + q).abs() < 1e-6);
    }

    #[test]
    fn cdf_matches_simulated_argmax() {
        let points = [-8.0, -2.0, 0.0, 1.0, 4.0];
        for law in [
            LimitLaw::SYMMETRIC,
            LimitLaw { phi1_sq: 2.0, phi2_sq: 0.5, xi: 1.5 },
        ] {
            let mc = mc_cdf(&law, &points, 4000);
            for (p, m) in points.iter().zip(mc) {
                let g = law.cdf(*p);
                assert!((g - m).abs() < 0.03, "{law:?} x={p}: closed {g} vs mc {m}");
            }
        }
    }

    #[test]
    fn tail_log_cdf_is_continuous() {
        let a = ln_norm_cdf(-29.999_999);
        let b = ln_norm_cdf(-30.000_001);
        assert!((a - b).abs() < 1e-4);
    }

    fn shifted_series(seed: u64, jump: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..200)
            .map(|t| {
                let e: f64 = StandardNormal.sample(&mut rng);
                e + if t >= 100 { jump } else { 0.0 }
            })
            .collect()
    }

    #[test]
    fn intervals_contain_estimate_and_nest() {
        let y = shifted_series(3, 1.5);
        let fit = estimate(&y, &ModelSpec::new(ModelKind::Mean, 10).unwrap(), 1).unwrap();
        let c95 = &break_confidence_intervals(&y, &fit, 0.95).unwrap()[0];
        let c99 = &break_confidence_intervals(&y, &fit, 0.99).unwrap()[0];
        assert_eq!(c95.status, CiStatus::Bounded);
        assert!(c95.contains_index(fit.break_indices[0]));
        assert!(c99.lower_index <= c95.lower_index && c99.upper_index >= c95.upper_index);
        assert!(c95.contains_index(99));
    }

    #[test]
    fn larger_jump_narrows_interval() {
        let spec = ModelSpec::new(ModelKind::Mean, 10).unwrap();
        let width = |jump| {
            let y = shifted_series(8, jump);
            let fit = estimate(&y, &spec, 1).unwrap();
            let c = &break_confidence_intervals(&y, &fit, 0.95).unwrap()[0];
            c.upper_index.unwrap() - c.lower_index.unwrap()
        };
        assert!(width(3.0) < width(1.0));
    }

    #[test]
    fn vanishing_change_is_unbounded() {
        let mut y = vec![1.0; 40];
        y[5] = 2.0;
        y[35] = 2.0;
        let spec = ModelSpec::new(ModelKind::Mean, 5).unwrap();
        let mut fit = estimate(&y, &spec, 1).unwrap();
        fit.break_indices = vec![19];
        let (segs, _) = crate::regression::fit_segments(&y, &spec, &[19], &fit.beta).unwrap();
        fit.segment_fits = segs;
        let c = &break_confidence_intervals(&y, &fit, 0.95).unwrap()[0];
        assert_eq!(c.status, CiStatus::VanishingChange);
        assert!(c.lower_index.is_none());
    }

    #[test]
    fn no_breaks_no_intervals() {
        let y = shifted_series(1, 0.0);
        let fit = estimate(&y, &ModelSpec::new(ModelKind::Ar, 10).unwrap(), 0).unwrap();
        assert!(break_confidence_intervals(&y, &fit, 0.95).unwrap().is_empty());
    }
}
