//! Acceptance suite: one line per criterion.
//!
//! Criteria 1-5 need the Westerhold et al. benthic record. Its location is
//! `STATEBREAK_WESTERHOLD` or `$STATEBREAK_DATA_DIR/westerhold2020.csv`;
//! column names default to `age_Ma` / `d18O_corr` and can be overridden with
//! `STATEBREAK_AGE_COL` / `STATEBREAK_VALUE_COL`. Without the file those
//! criteria report SKIPPED-DATA.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statebreak::inference::Criterion;
use statebreak::regression::SegmentCost;
use statebreak::{
    adf_test, bin_mean, dp_global_breaks, estimate_binned, fit_segments, information_criteria,
    load_csv, segment_ssr_table, split_states, ssr_path, BinnedSeries, DgpConfig,
    GlobalCoefficients, ModelKind, ModelSpec, RawSeries, SsrTable, StudyConfig, StudyMode,
    REFERENCE_BOUNDARIES_MA,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped,
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn data_file() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("STATEBREAK_WESTERHOLD") {
        return Some(PathBuf::from(p)).filter(|p| p.exists());
    }
    let dir = std::env::var_os("STATEBREAK_DATA_DIR")?;
    Some(PathBuf::from(dir).join("westerhold2020.csv")).filter(|p| p.exists())
}

fn load_record(path: &PathBuf) -> RawSeries {
    let age = std::env::var("STATEBREAK_AGE_COL").unwrap_or_else(|_| "age_Ma".into());
    let value = std::env::var("STATEBREAK_VALUE_COL").unwrap_or_else(|_| "d18O_corr".into());
    load_csv(path, &age, &value).expect("record loads")
}

/// Index of the bin whose younger edge is the reported age.
fn reported_index(series: &BinnedSeries, age: f64) -> i64 {
    let centre = age + series.step_ma() / 2.0;
    ((series.start_age - centre) / series.step_ma()).round() as i64
}

fn c1_binning(raw: &RawSeries) -> Outcome {
    let t0 = Instant::now();
    let b25 = bin_mean(raw, 25.0).unwrap();
    let elapsed = t0.elapsed();
    let b5 = bin_mean(raw, 5.0).unwrap();
    let s = b25.summary();
    let ok = b25.len() == 2685
        && (s.mean - 1.561).abs() <= 0.005
        && (s.sd - 1.273).abs() <= 0.005
        && b5.len() == 13_421
        && elapsed < Duration::from_secs(1);
    verdict(
        ok,
        format!(
            "25 kyr: {} bins, mean {:.4}, sd {:.4}; 5 kyr: {} bins; {:.3}s",
            b25.len(),
            s.mean,
            s.sd,
            b5.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_fixed_m(b25: &BinnedSeries) -> Outcome {
    let cases = [
        (ModelKind::Mean, [55.975, 46.725, 34.025, 13.4, 2.725]),
        (ModelKind::FixedAr, [56.025, 46.725, 34.15, 13.875, 2.775]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (kind, want) in cases {
        let spec = ModelSpec::from_duration(kind, 2.5, 25.0).unwrap();
        let t0 = Instant::now();
        let fit = estimate_binned(b25, &spec, 5).unwrap();
        let dt = t0.elapsed();
        let diffs: Vec<i64> = fit
            .break_indices
            .iter()
            .zip(want)
            .map(|(&i, a)| i as i64 - reported_index(b25, a))
            .collect();
        ok &= diffs.iter().all(|d| d.abs() <= 1) && dt < Duration::from_secs(30);
        detail.push(format!("{kind} ages {:?} bin offsets {:?} {:.1}s", fit.break_ages, diffs, dt.as_secs_f64()));
    }
    verdict(ok, detail.join("; "))
}

fn c3_parameters(b25: &BinnedSeries) -> Outcome {
    let breaks: Vec<usize> = [56.025, 46.725, 34.15, 13.875, 2.775]
        .iter()
        .map(|&a| reported_index(b25, a) as usize)
        .collect();
    let spec = ModelSpec::from_duration(ModelKind::FixedAr, 2.5, 25.0).unwrap();
    // joint least squares of the common slope at fixed breaks
    let rows = statebreak::design_rows(&b25.values, ModelKind::FixedAr).unwrap();
    let mut bounds = vec![0usize];
    bounds.extend(breaks.iter().map(|b| b + 1 - ModelKind::FixedAr.offset()));
    bounds.push(rows.len());
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for w in bounds.windows(2) {
        let seg = &rows[w[0]..w[1]];
        let n = seg.len() as f64;
        let mx = seg.iter().map(|r| r.x[0]).sum::<f64>() / n;
        let my = seg.iter().map(|r| r.y).sum::<f64>() / n;
        for r in seg {
            sxx += (r.x[0] - mx) * (r.x[0] - mx);
            sxy += (r.x[0] - mx) * (r.y - my);
        }
    }
    let phi = sxy / sxx;
    let (fits, _) = fit_segments(&b25.values, &spec, &breaks, &GlobalCoefficients::phi(phi)).unwrap();
    let want = [0.095, 0.154, 0.112, 0.141, 0.111, 0.340];
    let s2: Vec<f64> = fits.iter().map(|f| f.sigma2).collect();
    let ok = (phi - 0.833).abs() <= 0.01 && s2.iter().zip(want).all(|(a, b)| (a - b).abs() <= 0.01);
    verdict(ok, format!("phi {phi:.4}, sigma2 {s2:.3?}"))
}

fn c4_selection(b25: &BinnedSeries) -> Outcome {
    let want = [
        (ModelKind::Mean, 17usize, 14usize, 1usize),
        (ModelKind::FixedAr, 12, 6, 0),
        (ModelKind::Ar, 8, 3, 1),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (kind, bic, lwz, tol) in want {
        let spec = ModelSpec::from_duration(kind, 2.5, 25.0).unwrap();
        let usable = b25.len() - kind.offset();
        let m_max = statebreak::engine::default_max_breaks(usable, spec.min_segment_obs);
        let path = ssr_path(&b25.values, &spec, m_max).unwrap();
        let ic = information_criteria(&path, b25.len() - kind.offset(), kind).unwrap();
        let (b, l) = (ic.selected(Criterion::Bic), ic.selected(Criterion::Lwz));
        let pass = b.abs_diff(bic) <= tol && l.abs_diff(lwz) <= tol;
        ok &= pass;
        detail.push(format!("{kind} BIC {b} LWZ {l}"));
        if !pass {
            for r in &ic.rows {
                println!("    {kind} m={:2} ssr={:.6} bic={:.6} lwz={:.6}", r.m, r.ssr, r.bic, r.lwz);
            }
        }
    }
    verdict(ok, detail.join("; "))
}

fn c5_adf(b25: &BinnedSeries) -> Outcome {
    let full = adf_test(&b25.values, 0.01).unwrap();
    let groups = split_states(b25, &REFERENCE_BOUNDARIES_MA).unwrap();
    let reject: Vec<bool> = groups.iter().map(|g| adf_test(g, 0.01).unwrap().reject_at_1pct).collect();
    // Warmhouse II, Coolhouse I, Icehouse
    let ok = !full.reject_at_1pct && reject[2] && reject[3] && reject[5];
    verdict(
        ok,
        format!(
            "full stat {:.3} (cv {:.3}) reject={}; per state reject {:?}",
            full.statistic, full.critical_value_1pct, full.reject_at_1pct, reject
        ),
    )
}

fn study(dgp: usize, kind: ModelKind, mode: StudyMode) -> statebreak::StudyResult {
    let mut c = StudyConfig::new(DgpConfig::table(dgp, false).unwrap(), kind, mode);
    c.reps = 1000;
    c.seed = 20_240_101;
    statebreak::run_study(&c).unwrap()
}

fn c6_coverage() -> Outcome {
    let t0 = Instant::now();
    let fixed = StudyMode::FixedM { m: 1 };
    let cov = |dgp, kind| study(dgp, kind, fixed).aggregates.coverage.unwrap();
    let d7 = cov(7, ModelKind::FixedAr);
    let d8: Vec<f64> = ModelKind::ALL.iter().map(|&k| cov(8, k)).collect();
    let d1 = cov(1, ModelKind::FixedAr);
    let dt = t0.elapsed();
    let ok = (0.948..=1.0).contains(&d7)
        && d8.iter().all(|c| (0.92..=0.98).contains(c))
        && d1 < 0.55
        && dt < Duration::from_secs(600);
    verdict(
        ok,
        format!(
            "DGP7 fixed-ar {:.1}%; DGP8 mean/fixed-ar/ar {:.1}/{:.1}/{:.1}%; DGP1 fixed-ar {:.1}%; {:.0}s",
            100.0 * d7,
            100.0 * d8[0],
            100.0 * d8[1],
            100.0 * d8[2],
            100.0 * d1,
            dt.as_secs_f64()
        ),
    )
}

fn share(r: &statebreak::StudyResult, c: Criterion, m: usize) -> f64 {
    let sel: Vec<usize> = r
        .replications
        .iter()
        .filter_map(|x| x.selected.as_ref())
        .map(|s| s.get(c))
        .collect();
    sel.iter().filter(|&&s| s == m).count() as f64 / r.replications.len() as f64
}

fn c7_selection() -> Outcome {
    let d6 = share(&study(6, ModelKind::FixedAr, StudyMode::SelectM), Criterion::Lwz, 0);
    let d5 = share(&study(5, ModelKind::FixedAr, StudyMode::SelectM), Criterion::Bic, 1);
    let mean: Vec<f64> = (1..=7)
        .map(|d| share(&study(d, ModelKind::Mean, StudyMode::SelectM), Criterion::Bic, 3))
        .collect();
    let ok = d6 >= 0.95 && d5 >= 0.94 && mean.iter().all(|&s| s >= 0.95);
    verdict(
        ok,
        format!(
            "DGP6 LWZ=0 {:.1}%; DGP5 BIC=1 {:.1}%; mean BIC=3 by DGP {:?}%",
            100.0 * d6,
            100.0 * d5,
            mean.iter().map(|s| (1000.0 * s).round() / 10.0).collect::<Vec<_>>()
        ),
    )
}

/// Least-squares SSR of one segment from first principles.
fn direct_ssr(y: &[f64], kind: ModelKind, phi: f64, s: usize, e: usize) -> f64 {
    let off = kind.offset();
    let idx: Vec<usize> = (s + off..=e + off).collect();
    match kind {
        ModelKind::Ar => {
            let n = idx.len() as f64;
            let (sx, sy) = idx.iter().fold((0.0, 0.0), |(a, b), &t| (a + y[t - 1], b + y[t]));
            let (mx, my) = (sx / n, sy / n);
            let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
            for &t in &idx {
                cxx += (y[t - 1] - mx).powi(2);
                cxy += (y[t - 1] - mx) * (y[t] - my);
                cyy += (y[t] - my).powi(2);
            }
            cyy - cxy * cxy / cxx
        }
        _ => {
            let w: Vec<f64> = idx
                .iter()
                .map(|&t| if kind == ModelKind::FixedAr { y[t] - phi * y[t - 1] } else { y[t] })
                .collect();
            let m = w.iter().sum::<f64>() / w.len() as f64;
            w.iter().map(|v| (v - m).powi(2)).sum()
        }
    }
}

fn enumerate(table: &SsrTable, m: usize, h: usize) -> (f64, Vec<usize>) {
    fn rec(t: &SsrTable, start: usize, left: usize, h: usize, acc: f64, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        let n = t.len();
        if left == 0 {
            let total = acc + t.get(start, n - 1);
            if n - start >= h && total < best.0 {
                *best = (total, cur.clone());
            }
            return;
        }
        for end in (start + h - 1)..n {
            if n - end - 1 < left * h {
                break;
            }
            cur.push(end);
            rec(t, end + 1, left - 1, h, acc + t.get(start, end), cur, best);
            cur.pop();
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    rec(table, 0, m, h, 0.0, &mut Vec::new(), &mut best);
    best
}

fn c8_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    let mut failures = Vec::new();
    while checked < 200 {
        let kind = ModelKind::ALL[rng.gen_range(0..3)];
        let n = rng.gen_range(6..=40);
        let h = rng.gen_range(kind.q().max(2)..=5);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let usable = n - kind.offset();
        let m = rng.gen_range(0..=3usize);
        if (m + 1) * h > usable {
            continue;
        }
        let phi = rng.gen_range(-0.9..0.9);
        let beta = if kind == ModelKind::FixedAr { GlobalCoefficients::phi(phi) } else { GlobalCoefficients::none() };
        let spec = ModelSpec::new(kind, h).unwrap();
        let table = segment_ssr_table(&y, &spec, &beta).unwrap();
        let dp = dp_global_breaks(&table, m, h).unwrap();
        let (ssr, parts) = enumerate(&table, m, h);
        // the enumerated optimum, recomputed from first principles
        let mut direct = 0.0;
        let mut s = 0;
        for &b in parts.iter().chain(std::iter::once(&(usable - 1))) {
            direct += direct_ssr(&y, kind, phi, s, b);
            s = b + 1;
        }
        if dp.optimal_ssr[m] != ssr
            || dp.optimal_breaks[m] != parts
            || (direct - ssr).abs() > 1e-9 * direct.abs().max(1.0)
        {
            failures.push(format!("{kind} n={n} h={h} m={m}"));
        }
        checked += 1;
    }
    verdict(failures.is_empty(), format!("{checked} instances, mismatches {failures:?}"))
}

fn c9_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_statebreak");
    let mut outputs = Vec::new();
    // identical command lines, each run in its own working directory
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let mut files = Vec::new();
        for (mode, dgp) in [("fixed", "8_s"), ("select", "5")] {
            let (out, reps) = (format!("{mode}.json"), format!("{mode}.csv"));
            let status = Command::new(bin)
                .current_dir(dir.path())
                .args(["simulate", "--dgp", dgp, "--spec", "fixed-ar", "--reps", "40", "--seed", "77", "--mode", mode])
                .args(["--out", &out, "--replications-csv", &reps])
                .status()
                .unwrap();
            assert!(status.success());
            files.push(std::fs::read(dir.path().join(&out)).unwrap());
            files.push(std::fs::read(dir.path().join(&reps)).unwrap());
        }
        let stdout = Command::new(bin)
            .args(["simulate", "--dgp", "6", "--spec", "mean", "--reps", "10", "--seed", "1"])
            .output()
            .unwrap()
            .stdout;
        files.push(stdout);
        outputs.push(files);
    }
    let same = outputs[0] == outputs[1] && outputs[0].iter().all(|f| !f.is_empty());
    verdict(same, format!("{} artifacts compared across two runs", outputs[0].len()))
}

fn report(i: usize, name: &str, outcome: Outcome) -> bool {
    match outcome {
        Outcome::Pass(d) => println!("criterion {i} ({name}): PASS | {d}"),
        Outcome::Fail(d) => {
            println!("criterion {i} ({name}): FAIL | {d}");
            return false;
        }
        Outcome::Skipped => println!("criterion {i} ({name}): SKIPPED-DATA | Westerhold record not found"),
    }
    true
}

fn main() {
    let mut ok = true;
    match data_file() {
        Some(path) => {
            let raw = load_record(&path);
            ok &= report(1, "binning fidelity", c1_binning(&raw));
            let b25 = bin_mean(&raw, 25.0).unwrap();
            ok &= report(2, "fixed-m breaks", c2_fixed_m(&b25));
            ok &= report(3, "parameter fits", c3_parameters(&b25));
            ok &= report(4, "IC selection", c4_selection(&b25));
            ok &= report(5, "ADF pattern", c5_adf(&b25));
        }
        None => {
            for (i, name) in ["binning fidelity", "fixed-m breaks", "parameter fits", "IC selection", "ADF pattern"]
                .into_iter()
                .enumerate()
            {
                report(i + 1, name, Outcome::Skipped);
            }
        }
    }
    ok &= report(6, "simulation coverage", c6_coverage());
    ok &= report(7, "break-count selection", c7_selection());
    ok &= report(8, "DP vs exhaustive search", c8_oracle());
    ok &= report(9, "simulate determinism", c9_determinism());
    if !ok {
        std::process::exit(1);
    }
}
