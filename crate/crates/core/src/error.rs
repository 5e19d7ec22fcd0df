use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("numeric failure at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("non-numeric value {value:?} at row {row}")]
    NonNumeric { row: usize, value: String },

    #[error("missing value at row {row}")]
    MissingValue { row: usize },

    #[error("column {0} has no values")]
    EmptyColumn(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Process exit code: 2 invalid input, 3 numeric failure, 4 IO failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::Chain { .. } => 3,
            Error::FileNotFound(_) | Error::Io { .. } => 4,
            _ => 2,
        }
    }
}
