use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid CSR structure in row {row}: {reason}")]
    InvalidCsr { row: usize, reason: String },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("zero row {0} selected")]
    ZeroRow(usize),

    #[error("zero column {0} selected")]
    ZeroColumn(usize),

    #[error("matrix has no nonzero entries")]
    ZeroMatrix,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("iterate diverged at outer iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem size {rows}x{cols} exceeds the oracle limit of {limit}")]
    ScaleCap {
        rows: usize,
        cols: usize,
        limit: usize,
    },

    #[error("right-hand side construction failed: {0}")]
    Inconsistency(String),

    #[error("matrix market parse error at line {line}: {reason}")]
    MatrixMarket { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
