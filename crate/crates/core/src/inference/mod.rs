pub mod adf;
pub mod ci;
pub mod ic;

pub use adf::{adf_test, AdfResult};
pub use ci::{binned_confidence_intervals, break_confidence_intervals, BreakCI, CiStatus, LimitLaw};
pub use ic::{information_criteria, Criterion, IcRow, IcTable};
