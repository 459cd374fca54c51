//! Monte Carlo study of single-break processes.

pub mod density;
pub mod dgp;
pub mod study;

pub use density::{density_export, DensityExport};
pub use dgp::{generate, DgpConfig, ErrorKind};
pub use study::{aggregate, run_study, Replication, StudyConfig, StudyMode, StudyResult};
