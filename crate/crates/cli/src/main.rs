//! `statebreak`: binning, break estimation, model selection, unit-root
//! screening and Monte Carlo studies for climate proxy records.

mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use statebreak::engine::{default_max_breaks, max_feasible_breaks, ssr_path};
use statebreak::ingest::{DEFAULT_AGE_COLUMN, DEFAULT_VALUE_COLUMN};
use statebreak::inference::Criterion;
use statebreak::simulation::density_export;
use statebreak::{
    adf_test, bin_mean, binned_confidence_intervals, estimate_binned, estimate_path,
    gap_statistics, information_criteria, load_csv, run_study, split_states, state_summary,
    BinnedSeries, BreakCI, BreakFit, DgpConfig, ModelKind, ModelSpec, Reverse, StudyConfig,
    StudyMode, REFERENCE_BOUNDARIES_MA, REFERENCE_STATE_NAMES,
};

use output::{csv_with_header, emit, envelope, write_atomic, Metadata};
use plot::PlotFit;

/// Directory searched for relative input paths that do not exist as given.
const DATA_DIR_ENV: &str = "STATEBREAK_DATA_DIR";

#[derive(Parser, Debug)]
#[command(name = "statebreak", version, about = "Structural breakpoints in climate proxy records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, clean and order a raw record; report sampling gaps.
    Ingest(IngestArgs),
    /// Mean-bin a record onto one or more equidistant grids.
    Bin(BinArgs),
    /// Estimate a fixed number of breaks with confidence intervals.
    Estimate(EstimateArgs),
    /// Estimate every break count from 1 to `--m-max`.
    Path(PathArgs),
    /// Choose the number of breaks by information criteria.
    Select(SelectArgs),
    /// Augmented Dickey-Fuller test, full sample and per reference state.
    Adf(AdfArgs),
    /// Monte Carlo study of a single-break process.
    Simulate(SimulateArgs),
    /// Reverse the time direction of a binned series.
    Reverse(ReverseArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct RawInput {
    /// Raw delimited record (comma or tab).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = DEFAULT_AGE_COLUMN)]
    age_col: String,
    #[arg(long, default_value = DEFAULT_VALUE_COLUMN)]
    value_col: String,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SeriesInput {
    /// Raw delimited record, binned at `--bin-kyr`.
    #[arg(long, conflicts_with = "binned", required_unless_present = "binned")]
    input: Option<PathBuf>,
    /// Binned series as written by `bin`.
    #[arg(long)]
    binned: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_AGE_COLUMN)]
    age_col: String,
    #[arg(long, default_value = DEFAULT_VALUE_COLUMN)]
    value_col: String,
    /// Bin size in kyr for `--input`.
    #[arg(long, default_value_t = 25.0)]
    bin_kyr: f64,
    /// Estimate on the time-reversed series.
    #[arg(long)]
    reverse: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = SpecArg::FixedAr)]
    spec: SpecArg,
    /// Minimum regime duration in Myr.
    #[arg(long, default_value_t = 2.5, conflicts_with = "min_len")]
    h_myr: f64,
    /// Minimum regime length in observations (overrides `--h-myr`).
    #[arg(long)]
    min_len: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SpecArg {
    Mean,
    FixedAr,
    Ar,
}

impl From<SpecArg> for ModelKind {
    fn from(s: SpecArg) -> Self {
        match s {
            SpecArg::Mean => ModelKind::Mean,
            SpecArg::FixedAr => ModelKind::FixedAr,
            SpecArg::Ar => ModelKind::Ar,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct IngestArgs {
    #[command(flatten)]
    raw: RawInput,
    /// Gap length (kyr) counted as a sampling gap.
    #[arg(long, default_value_t = 10.0)]
    gap_threshold_kyr: f64,
    /// Directory for `series.csv`, `gap_report.json` and `dropped_rows.csv`.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BinArgs {
    #[command(flatten)]
    raw: RawInput,
    /// Comma-separated bin sizes in kyr.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 25.0])]
    bin_kyr: Vec<f64>,
    /// Directory for `binned_<Δ>kyr.csv` files and `summary.json`.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[command(flatten)]
    model: ModelArgs,
    /// Number of breaks.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    /// JSON output path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for figure-data layers.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Also render `plot.svg` into `--plot-dir`.
    #[arg(long, requires = "plot_dir")]
    svg: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PathArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 15)]
    m_max: usize,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    #[arg(long, requires = "plot_dir")]
    svg: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SelectArgs {
    #[command(flatten)]
    series: SeriesInput,
    #[command(flatten)]
    model: ModelArgs,
    /// Largest break count searched (default: all feasible, at most 26).
    #[arg(long)]
    m_max: Option<usize>,
    /// Include the KT criterion in the output.
    #[arg(long)]
    with_kt: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// IC table CSV (`m,ssr,bic,lwz,kt`).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct AdfArgs {
    #[command(flatten)]
    series: SeriesInput,
    /// Significance level: 0.01, 0.05 or 0.10.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Fixed,
    Select,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimulateArgs {
    /// Study file (JSON StudyConfig); command-line flags are ignored when given.
    #[arg(long, conflicts_with_all = ["dgp", "serial"])]
    config: Option<PathBuf>,
    /// Design row 1..=8, optionally with `_s` for serially correlated errors.
    #[arg(long, required_unless_present = "config")]
    dgp: Option<String>,
    /// Use the serially correlated variant of `--dgp`.
    #[arg(long)]
    serial: bool,
    #[arg(long, value_enum, default_value_t = SpecArg::FixedAr)]
    spec: SpecArg,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Fixed)]
    mode: ModeArg,
    /// Imposed break count in fixed mode.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Largest break count in select mode.
    #[arg(long, default_value_t = 3)]
    m_max: usize,
    #[arg(long, default_value_t = 25)]
    min_len: usize,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    /// Aggregate JSON path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replication CSV.
    #[arg(long)]
    replications_csv: Option<PathBuf>,
    /// Histogram and kernel density of the first break estimate.
    #[arg(long)]
    density_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ReverseArgs {
    /// Binned series as written by `bin`.
    #[arg(long)]
    binned: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn load_series(args: &SeriesInput, meta: &mut Metadata) -> Result<BinnedSeries> {
    let series = match (&args.input, &args.binned) {
        (Some(p), _) => {
            let p = resolve(p);
            meta.add_input(&p)?;
            let raw = load_csv(&p, &args.age_col, &args.value_col)?;
            bin_mean(&raw, args.bin_kyr)?
        }
        (None, Some(p)) => {
            let p = resolve(p);
            meta.add_input(&p)?;
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            BinnedSeries::read_csv(&text, None)?
        }
        (None, None) => bail!("one of --input or --binned is required"),
    };
    Ok(if args.reverse { series.reverse_time() } else { series })
}

fn model_spec(model: &ModelArgs, series: &BinnedSeries) -> Result<ModelSpec> {
    let kind = ModelKind::from(model.spec);
    Ok(match model.min_len {
        Some(n) => ModelSpec::new(kind, n)?,
        None => ModelSpec::from_duration(kind, model.h_myr, series.bin_kyr)?,
    })
}

#[derive(Serialize)]
struct FitWithIntervals {
    fit: BreakFit,
    confidence_intervals: Vec<BreakCI>,
}

fn fit_with_cis(series: &BinnedSeries, spec: &ModelSpec, m: usize, level: f64) -> Result<FitWithIntervals> {
    let fit = estimate_binned(series, spec, m)?;
    let cis = binned_confidence_intervals(series, &fit, level)?;
    Ok(FitWithIntervals {
        fit,
        confidence_intervals: cis,
    })
}

fn emit_plots(dir: &Path, meta: &Metadata, series: &BinnedSeries, fits: &[FitWithIntervals], svg: bool) -> Result<()> {
    let layers: Vec<PlotFit> = fits
        .iter()
        .map(|f| PlotFit {
            fit: &f.fit,
            cis: &f.confidence_intervals,
        })
        .collect();
    plot::write_all(dir, meta, series, &layers, svg)
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let mut meta = Metadata::new("ingest", a)?;
    let path = resolve(&a.raw.input);
    meta.add_input(&path)?;
    let raw = load_csv(&path, &a.raw.age_col, &a.raw.value_col)?;
    let gaps = gap_statistics(&raw, a.gap_threshold_kyr)?;
    #[derive(Serialize)]
    struct Report<'a> {
        n_observations: usize,
        n_dropped: usize,
        gaps: &'a statebreak::GapReport,
    }
    let report = Report {
        n_observations: raw.len(),
        n_dropped: raw.dropped_rows.len(),
        gaps: &gaps,
    };
    write_atomic(&a.out_dir.join("series.csv"), &csv_with_header(&meta, |b| raw.write_csv(b))?)?;
    write_atomic(&a.out_dir.join("gap_report.json"), &envelope(&meta, "report", &report)?)?;
    let mut dropped = meta.csv_header()?;
    dropped.push_str("line\n");
    for l in &raw.dropped_rows {
        dropped.push_str(&format!("{l}\n"));
    }
    write_atomic(&a.out_dir.join("dropped_rows.csv"), dropped.as_bytes())?;
    Ok(())
}

fn kyr_label(b: f64) -> String {
    if b.fract() == 0.0 {
        format!("{}", b as i64)
    } else {
        b.to_string()
    }
}

fn cmd_bin(a: &BinArgs) -> Result<()> {
    let mut meta = Metadata::new("bin", a)?;
    let path = resolve(&a.raw.input);
    meta.add_input(&path)?;
    let raw = load_csv(&path, &a.raw.age_col, &a.raw.value_col)?;
    #[derive(Serialize)]
    struct Summary {
        bin_kyr: f64,
        n_bins: usize,
        n_interpolated: usize,
        overall: statebreak::StateStats,
        states: Option<Vec<NamedState>>,
    }
    #[derive(Serialize)]
    struct NamedState {
        name: &'static str,
        #[serde(flatten)]
        stats: statebreak::StateStats,
    }
    let mut summaries = Vec::new();
    for &b in &a.bin_kyr {
        let binned = bin_mean(&raw, b)?;
        let file = a.out_dir.join(format!("binned_{}kyr.csv", kyr_label(b)));
        write_atomic(&file, &csv_with_header(&meta, |w| binned.write_csv(w))?)?;
        let states = state_summary(&binned, &REFERENCE_BOUNDARIES_MA).ok().map(|v| {
            v.into_iter()
                .zip(REFERENCE_STATE_NAMES)
                .map(|(stats, name)| NamedState { name, stats })
                .collect()
        });
        summaries.push(Summary {
            bin_kyr: b,
            n_bins: binned.len(),
            n_interpolated: binned.interpolated.iter().filter(|&&f| f).count(),
            overall: binned.summary(),
            states,
        });
    }
    write_atomic(&a.out_dir.join("summary.json"), &envelope(&meta, "summaries", &summaries)?)
}

fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let mut meta = Metadata::new("estimate", a)?;
    let series = load_series(&a.series, &mut meta)?;
    let spec = model_spec(&a.model, &series)?;
    let result = fit_with_cis(&series, &spec, a.m, a.ci_level)?;
    if let Some(dir) = &a.plot_dir {
        emit_plots(dir, &meta, &series, std::slice::from_ref(&result), a.svg)?;
    }
    emit(a.out.as_deref(), &envelope(&meta, "result", &result)?)
}

fn cmd_path(a: &PathArgs) -> Result<()> {
    let mut meta = Metadata::new("path", a)?;
    let series = load_series(&a.series, &mut meta)?;
    let spec = model_spec(&a.model, &series)?;
    let fits = estimate_path(&series.values, &spec, 1..=a.m_max)?;
    let results = fits
        .into_iter()
        .map(|mut fit| {
            fit.label_ages(&series);
            let cis = binned_confidence_intervals(&series, &fit, a.ci_level)?;
            Ok(FitWithIntervals {
                fit,
                confidence_intervals: cis,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &a.plot_dir {
        emit_plots(dir, &meta, &series, &results, a.svg)?;
    }
    emit(a.out.as_deref(), &envelope(&meta, "results", &results)?)
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    let mut meta = Metadata::new("select", a)?;
    let series = load_series(&a.series, &mut meta)?;
    let spec = model_spec(&a.model, &series)?;
    let n_obs = series.len() - spec.kind.offset();
    // a requested maximum beyond what the regime length allows is clamped
    let m_max = a
        .m_max
        .map(|m| m.min(max_feasible_breaks(n_obs, spec.min_segment_obs)))
        .unwrap_or_else(|| default_max_breaks(n_obs, spec.min_segment_obs));
    let path = ssr_path(&series.values, &spec, m_max)?;
    let table = information_criteria(&path, n_obs, spec.kind)?;
    if let Some(p) = &a.csv {
        write_atomic(p, &csv_with_header(&meta, |w| table.write_csv(w))?)?;
    }
    let mut criteria = vec![Criterion::Bic, Criterion::Lwz];
    if a.with_kt {
        criteria.push(Criterion::Kt);
    }
    let selected: serde_json::Map<String, serde_json::Value> = criteria
        .iter()
        .map(|&c| {
            let m = table.selected(c);
            let breaks: Vec<f64> = path.optimal_breaks[m]
                .iter()
                .map(|&i| series.age_at(i as f64))
                .collect();
            (
                c.name().to_string(),
                serde_json::json!({ "m": m, "break_ages": breaks }),
            )
        })
        .collect();
    let rows: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|r| {
            let mut v = serde_json::json!({ "m": r.m, "ssr": r.ssr, "n_params": r.n_params, "bic": r.bic, "lwz": r.lwz });
            if a.with_kt {
                v["kt"] = serde_json::json!(r.kt);
            }
            v
        })
        .collect();
    let payload = serde_json::json!({
        "n_obs": table.n_obs,
        "min_segment_obs": spec.min_segment_obs,
        "m_max": m_max,
        "rows": rows,
        "selected": selected,
    });
    emit(a.out.as_deref(), &envelope(&meta, "ic_table", &payload)?)
}

fn cmd_adf(a: &AdfArgs) -> Result<()> {
    let mut meta = Metadata::new("adf", a)?;
    let series = load_series(&a.series, &mut meta)?;
    let mut results = serde_json::Map::new();
    results.insert("full_sample".into(), serde_json::to_value(adf_test(&series.values, a.alpha)?)?);
    match split_states(&series, &REFERENCE_BOUNDARIES_MA) {
        Ok(groups) => {
            for (name, mut vals) in REFERENCE_STATE_NAMES.iter().zip(groups) {
                // test in calendar order regardless of series direction
                if series.reversed {
                    vals.reverse();
                }
                let v = match adf_test(&vals, a.alpha) {
                    Ok(r) => serde_json::to_value(r)?,
                    Err(e) => serde_json::json!({ "error": e.to_string() }),
                };
                results.insert((*name).to_string(), v);
            }
        }
        Err(e) => {
            results.insert("states".into(), serde_json::json!({ "error": e.to_string() }));
        }
    }
    emit(a.out.as_deref(), &envelope(&meta, "adf", &results)?)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut meta = Metadata::new("simulate", a)?;
    let config = match &a.config {
        Some(p) => {
            let p = resolve(p);
            meta.add_input(&p)?;
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<StudyConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => {
            let id = a.dgp.as_deref().ok_or_else(|| anyhow!("--dgp is required"))?;
            let mut dgp = DgpConfig::from_id(id)?;
            if a.serial {
                dgp = DgpConfig::from_id(&format!("{}_s", id.trim_end_matches("_s")))?;
            }
            let mode = match a.mode {
                ModeArg::Fixed => StudyMode::FixedM { m: a.m },
                ModeArg::Select => StudyMode::SelectM,
            };
            StudyConfig {
                dgp,
                spec: a.spec.into(),
                reps: a.reps,
                seed: a.seed,
                mode,
                min_len: a.min_len,
                m_max: a.m_max,
                ci_level: a.ci_level,
            }
        }
    };
    let result = run_study(&config)?;
    if let Some(p) = &a.replications_csv {
        write_atomic(p, &csv_with_header(&meta, |w| result.write_replications_csv(w))?)?;
    }
    if let Some(p) = &a.density_csv {
        let est: Vec<f64> = result
            .replications
            .iter()
            .filter_map(|r| r.breaks.first())
            .map(|&b| b as f64)
            .collect();
        let d = density_export(&est, 1.0, 512)?;
        write_atomic(p, &csv_with_header(&meta, |w| d.write_csv(w))?)?;
    }
    #[derive(Serialize)]
    struct Aggregate<'a> {
        config: &'a StudyConfig,
        true_m: usize,
        true_break: usize,
        aggregates: &'a statebreak::simulation::study::Aggregates,
    }
    let payload = Aggregate {
        config: &result.config,
        true_m: result.true_m,
        true_break: result.true_break,
        aggregates: &result.aggregates,
    };
    emit(a.out.as_deref(), &envelope(&meta, "study", &payload)?)
}

fn cmd_reverse(a: &ReverseArgs) -> Result<()> {
    let mut meta = Metadata::new("reverse", a)?;
    let p = resolve(&a.binned);
    meta.add_input(&p)?;
    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
    let series = BinnedSeries::read_csv(&text, None)?.reverse_time();
    write_atomic(&a.out, &csv_with_header(&meta, |w| series.write_csv(w))?)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Bin(a) => cmd_bin(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Path(a) => cmd_path(a),
        Command::Select(a) => cmd_select(a),
        Command::Adf(a) => cmd_adf(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reverse(a) => cmd_reverse(a),
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    use statebreak::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::Io { .. }) => "io",
        Some(E::Csv(_)) => "csv",
        Some(E::MissingColumn(_)) => "missing-column",
        Some(E::NonNumeric { .. }) => "non-numeric",
        Some(E::InvalidArgument(_)) => "invalid-argument",
        Some(E::TooShort { .. }) => "too-short",
        Some(E::AllEmpty) => "all-empty",
        Some(E::BoundaryOutsideSpan(_)) => "boundary-outside-span",
        Some(E::NonMonotoneBoundaries) => "non-monotone-boundaries",
        Some(E::Singular(_)) => "singular",
        Some(E::Infeasible { .. }) => "infeasible",
        Some(E::InsufficientData(_)) => "insufficient-data",
        None => "error",
    }
}

fn report(kind: &str, message: &str) {
    let doc = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{doc}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
