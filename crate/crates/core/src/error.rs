use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("row {row}: cannot parse `{value}` in column `{column}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: need at least {needed} observations, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("all bins are empty")]
    AllEmpty,

    #[error("boundary {0} Ma lies outside the series span")]
    BoundaryOutsideSpan(f64),

    #[error("boundaries must be strictly decreasing in age")]
    NonMonotoneBoundaries,

    #[error("singular regression: {0}")]
    Singular(String),

    #[error("{requested} breaks infeasible with minimum regime length {min_len} on {len} observations (at most {max_feasible})")]
    Infeasible {
        requested: usize,
        max_feasible: usize,
        len: usize,
        min_len: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
