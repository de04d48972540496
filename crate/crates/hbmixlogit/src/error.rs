//! Error type shared across the crate.

use std::path::PathBuf;

/// Errors raised by data ingestion, configuration checks, linear algebra,
/// and file output.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found in input header")]
    MissingColumn(String),

    #[error("non-numeric value `{value}` in column `{column}` (record {record})")]
    NonNumeric {
        column: String,
        record: usize,
        value: String,
    },

    #[error("missing value in column `{column}` (record {record})")]
    MissingValue { column: String, record: usize },

    #[error("identifier in column `{column}` (record {record}) is not an integer")]
    NonIntegerId { column: String, record: usize },

    #[error("multiple choices in group {0}")]
    MultipleChoices(i64),

    #[error("no chosen alternative in group {0}")]
    NoChoice(i64),

    #[error("group {0} has fewer than 2 alternatives")]
    GroupTooSmall(i64),

    #[error("group {0} spans multiple identifier values")]
    GroupSpansIdentifiers(i64),

    #[error("dependent variable must be 0/1, got {value} (record {record})")]
    NotBinary { record: usize, value: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("log target evaluated to NaN at {0:?}")]
    NanTarget(Vec<f64>),

    #[error("file {0} already exists (pass replace to overwrite)")]
    FileExists(PathBuf),

    #[error("append header mismatch in {path}: expected `{expected}`, found `{found}`")]
    AppendHeaderMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("draw file {0} does not match the expected column schema: {1}")]
    BadDrawSchema(PathBuf, String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
