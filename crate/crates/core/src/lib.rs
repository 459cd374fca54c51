//! Structural breakpoint estimation for irregularly sampled climate proxy
//! records.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`ingest`]: load and clean an irregular `(age, value)` record.
//! - [`binning`]: mean-bin onto an equidistant grid, filling interior gaps
//!   by linear interpolation.
//! - [`regression`]: segment-wise least squares for the three regression
//!   specifications (regime means, common-AR with regime intercepts, and
//!   fully regime-specific AR(1)).
//! - [`engine`]: global SSR minimisation over break locations by dynamic
//!   programming, with the alternating scheme for partial structural change.
//! - [`hac`]: prewhitened quadratic-spectral long-run covariance.
//! - [`inference`]: break-date confidence intervals, information criteria
//!   and the augmented Dickey-Fuller screen.
//! - [`simulation`]: Monte Carlo harness for single-break processes.

pub mod binning;
pub mod engine;
pub mod error;
pub mod hac;
pub mod inference;
pub mod ingest;
mod linalg;
pub mod regression;
pub mod simulation;

pub use binning::{
    bin_mean, interpolate_gaps, split_states, state_summary, BinnedSeries, StateStats,
};
pub use engine::{
    dp_global_breaks, estimate, estimate_binned, estimate_path, ssr_path, BreakFit, SsrByM,
};
pub use error::{Error, Result};
/// Matrix types used by [`hac_covariance`].
pub use nalgebra;
pub use hac::{hac_covariance, prewhiten, qs_kernel, HacConfig, HacResult};
pub use inference::{
    adf_test, binned_confidence_intervals, break_confidence_intervals, information_criteria,
    AdfResult, BreakCI, Criterion, IcTable,
};
pub use ingest::{gap_statistics, load_csv, GapReport, Observation, RawSeries, Reverse};
pub use regression::{
    design_rows, fit_segments, segment_ssr_table, GlobalCoefficients, ModelKind, ModelSpec,
    SegmentFit, SsrTable,
};
pub use simulation::{
    density_export, generate, run_study, DgpConfig, ErrorKind, StudyConfig, StudyMode, StudyResult,
};

/// Climate-state boundaries (Ma) of the reference six-state partition of the
/// Cenozoic benthic record, oldest first.
pub const REFERENCE_BOUNDARIES_MA: [f64; 5] = [56.0, 47.0, 34.0, 13.9, 3.3];

/// Names of the six reference states, oldest first.
pub const REFERENCE_STATE_NAMES: [&str; 6] = [
    "Warmhouse I",
    "Hothouse",
    "Warmhouse II",
    "Coolhouse I",
    "Coolhouse II",
    "Icehouse",
];
