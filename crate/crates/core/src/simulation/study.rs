//! Replication scheduler and aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate, DgpConfig};
use crate::engine::{estimate, ssr_path};
use crate::error::{Error, Result};
use crate::inference::{break_confidence_intervals, information_criteria, CiStatus, Criterion};
use crate::regression::{ModelKind, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum StudyMode {
    /// Impose `m` breaks and build confidence intervals.
    FixedM { m: usize },
    /// Choose `m ≤ m_max` by each information criterion.
    SelectM,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub dgp: DgpConfig,
    pub spec: ModelKind,
    pub reps: usize,
    /// Replication `r` uses seed `seed + r`.
    pub seed: u64,
    pub mode: StudyMode,
    pub min_len: usize,
    pub m_max: usize,
    pub ci_level: f64,
}

impl StudyConfig {
    pub fn new(dgp: DgpConfig, spec: ModelKind, mode: StudyMode) -> Self {
        StudyConfig {
            dgp,
            spec,
            reps: 1000,
            seed: 1,
            mode,
            min_len: 25,
            m_max: 3,
            ci_level: 0.95,
        }
    }

    fn model_spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.spec, self.min_len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub bic: usize,
    pub lwz: usize,
    pub kt: usize,
}

impl Selection {
    pub fn get(&self, c: Criterion) -> usize {
        match c {
            Criterion::Bic => self.bic,
            Criterion::Lwz => self.lwz,
            Criterion::Kt => self.kt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub rep: usize,
    pub seed: u64,
    pub error: Option<String>,
    /// Estimated break dates, 1-based (last period of each earlier regime).
    pub breaks: Vec<usize>,
    /// CI bounds per break, 1-based; `None` when unbounded.
    pub ci_lower: Vec<Option<usize>>,
    pub ci_upper: Vec<Option<usize>>,
    pub selected: Option<Selection>,
}

impl Replication {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// Whether the first interval contains `date` (unbounded intervals do).
    pub fn covers(&self, date: usize) -> Option<bool> {
        match (self.ci_lower.first()?, self.ci_upper.first()?) {
            (Some(l), Some(u)) => Some(*l <= date && date <= *u),
            _ => Some(true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub mean_selected: f64,
    /// Share of replications selecting the true number of breaks.
    pub pct_correct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean_break: Option<f64>,
    pub median_ci_lower: Option<f64>,
    pub median_ci_upper: Option<f64>,
    pub coverage: Option<f64>,
    pub bic: Option<CriterionSummary>,
    pub lwz: Option<CriterionSummary>,
    pub kt: Option<CriterionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub true_m: usize,
    pub true_break: usize,
    pub replications: Vec<Replication>,
    pub aggregates: Aggregates,
}

impl StudyResult {
    pub fn criterion(&self, c: Criterion) -> Option<&CriterionSummary> {
        match c {
            Criterion::Bic => self.aggregates.bic.as_ref(),
            Criterion::Lwz => self.aggregates.lwz.as_ref(),
            Criterion::Kt => self.aggregates.kt.as_ref(),
        }
    }

    /// Per-replication CSV.
    pub fn write_replications_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rep", "seed", "ok", "breaks", "ci_lower", "ci_upper", "bic", "lwz", "kt", "error"])?;
        let join = |v: &[Option<usize>]| {
            v.iter()
                .map(|x| x.map_or("NA".to_string(), |x| x.to_string()))
                .collect::<Vec<_>>()
                .join(";")
        };
        for r in &self.replications {
            let sel = |c| r.selected.as_ref().map_or(String::new(), |s| s.get(c).to_string());
            w.write_record([
                r.rep.to_string(),
                r.seed.to_string(),
                r.ok().to_string(),
                r.breaks.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";"),
                join(&r.ci_lower),
                join(&r.ci_upper),
                sel(Criterion::Bic),
                sel(Criterion::Lwz),
                sel(Criterion::Kt),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<replications>", e))?;
        Ok(())
    }
}

fn replicate(cfg: &StudyConfig, spec: &ModelSpec, rep: usize) -> Replication {
    let seed = cfg.seed.wrapping_add(rep as u64);
    let mut out = Replication {
        rep,
        seed,
        error: None,
        breaks: vec![],
        ci_lower: vec![],
        ci_upper: vec![],
        selected: None,
    };
    let run = |out: &mut Replication| -> Result<()> {
        let y = generate(&cfg.dgp.with_seed(seed))?;
        match cfg.mode {
            StudyMode::FixedM { m } => {
                let fit = estimate(&y, spec, m)?;
                let cis = break_confidence_intervals(&y, &fit, cfg.ci_level)?;
                out.breaks = fit.break_indices.iter().map(|b| b + 1).collect();
                for c in cis {
                    let bounded = c.status == CiStatus::Bounded;
                    out.ci_lower.push(c.lower_index.filter(|_| bounded).map(|i| i + 1));
                    out.ci_upper.push(c.upper_index.filter(|_| bounded).map(|i| i + 1));
                }
            }
            StudyMode::SelectM => {
                let path = ssr_path(&y, spec, cfg.m_max)?;
                let n_obs = y.len() - spec.kind.offset();
                let ic = information_criteria(&path, n_obs, spec.kind)?;
                out.selected = Some(Selection {
                    bic: ic.selected_bic,
                    lwz: ic.selected_lwz,
                    kt: ic.selected_kt,
                });
            }
        }
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.error = Some(e.to_string());
        out.breaks.clear();
        out.ci_lower.clear();
        out.ci_upper.clear();
        out.selected = None;
    }
    out
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Aggregates recomputed from stored replications.
pub fn aggregate(reps: &[Replication], true_m: usize, true_break: usize) -> Aggregates {
    let ok: Vec<&Replication> = reps.iter().filter(|r| r.ok()).collect();
    let firsts: Vec<f64> = ok.iter().filter_map(|r| r.breaks.first()).map(|&b| b as f64).collect();
    let mean_break = (!firsts.is_empty()).then(|| firsts.iter().sum::<f64>() / firsts.len() as f64);
    let lowers = ok.iter().filter_map(|r| r.ci_lower.first().copied().flatten()).map(|v| v as f64).collect();
    let uppers = ok.iter().filter_map(|r| r.ci_upper.first().copied().flatten()).map(|v| v as f64).collect();
    let covered: Vec<bool> = ok.iter().filter_map(|r| r.covers(true_break)).collect();
    let coverage = (!covered.is_empty())
        .then(|| covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64);
    let summary = |c: Criterion| {
        let sel: Vec<usize> = ok.iter().filter_map(|r| r.selected.as_ref()).map(|s| s.get(c)).collect();
        (!sel.is_empty()).then(|| CriterionSummary {
            mean_selected: sel.iter().sum::<usize>() as f64 / sel.len() as f64,
            pct_correct: sel.iter().filter(|&&m| m == true_m).count() as f64 / sel.len() as f64,
        })
    };
    Aggregates {
        n_ok: ok.len(),
        n_failed: reps.len() - ok.len(),
        mean_break,
        median_ci_lower: median(lowers),
        median_ci_upper: median(uppers),
        coverage,
        bic: summary(Criterion::Bic),
        lwz: summary(Criterion::Lwz),
        kt: summary(Criterion::Kt),
    }
}

/// Runs `config.reps` replications in parallel; results are ordered by
/// replication index and do not depend on the thread schedule.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.reps == 0 {
        return Err(Error::InvalidArgument("at least one replication required".into()));
    }
    if !(config.ci_level > 0.0 && config.ci_level < 1.0) {
        return Err(Error::InvalidArgument("confidence level outside (0, 1)".into()));
    }
    config.dgp.validate()?;
    let spec = config.model_spec()?;
    let replications: Vec<Replication> = (0..config.reps)
        .into_par_iter()
        .map(|r| replicate(config, &spec, r))
        .collect();
    let true_m = usize::from(config.dgp.has_break());
    let true_break = config.dgp.break_at;
    Ok(StudyResult {
        aggregates: aggregate(&replications, true_m, true_break),
        config: config.clone(),
        true_m,
        true_break,
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dgp: usize, spec: ModelKind, mode: StudyMode) -> StudyConfig {
        let mut c = StudyConfig::new(DgpConfig::table(dgp, false).unwrap(), spec, mode);
        c.reps = 20;
        c.seed = 7;
        c
    }

    #[test]
    fn fixed_mode_returns_one_break_each() {
        let r = run_study(&small(8, ModelKind::FixedAr, StudyMode::FixedM { m: 1 })).unwrap();
        assert_eq!(r.aggregates.n_failed, 0);
        for rep in &r.replications {
            assert_eq!(rep.breaks.len(), 1);
            assert_eq!(rep.ci_lower.len(), 1);
        }
        let mb = r.aggregates.mean_break.unwrap();
        assert!((mb - 250.0).abs() < 15.0, "{mb}");
    }

    #[test]
    fn deterministic_across_runs() {
        let c = small(5, ModelKind::Mean, StudyMode::SelectM);
        let a = serde_json::to_string(&run_study(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&run_study(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregates_recompute() {
        let r = run_study(&small(2, ModelKind::FixedAr, StudyMode::FixedM { m: 1 })).unwrap();
        assert_eq!(aggregate(&r.replications, r.true_m, r.true_break), r.aggregates);
        let cov = r.aggregates.coverage.unwrap();
        assert!((0.0..=1.0).contains(&cov));
    }

    #[test]
    fn selection_bounded_by_cap() {
        let r = run_study(&small(6, ModelKind::FixedAr, StudyMode::SelectM)).unwrap();
        for rep in &r.replications {
            let s = rep.selected.as_ref().unwrap();
            assert!(s.bic <= 3 && s.lwz <= 3 && s.kt <= 3);
        }
        assert_eq!(r.true_m, 0);
    }

    #[test]
    fn zero_reps_rejected() {
        let mut c = small(1, ModelKind::Mean, StudyMode::SelectM);
        c.reps = 0;
        assert!(run_study(&c).is_err());
    }
}
