use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while ingesting data or running checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{cell}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row}, column `{column}`: non-finite value")]
    NonFinite { row: usize, column: String },
    #[error("row {row}, column `{column}`: probability {value} outside [0, 1]")]
    ProbabilityOutOfRange {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("row {row}: category probabilities sum to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("row {row}: outcome {value} is not a valid category")]
    InvalidOutcome { row: usize, value: f64 },
    #[error("dimension mismatch: {expected} observations but {found} columns of draws")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("value {value} at index {index} is not a nonnegative integer; use a continuous check instead")]
    NotACount { index: usize, value: f64 },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value {0} is not in the support of the distribution")]
    NotInSupport(f64),
    #[error("empty input")]
    Empty,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
