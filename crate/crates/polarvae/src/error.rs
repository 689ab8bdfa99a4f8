//! Crate-wide error type and its mapping to process exit codes.

use thiserror::Error;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation
    /// (nonpositive input to `log_gamma`, off-simplex angle, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Incompatible dimensions (matrix/vector shape mismatch).
    #[error("shape error: {0}")]
    Shape(String),
    /// Invalid run configuration (unknown key, bad value, missing field).
    #[error("config error: {0}")]
    Config(String),
    /// Malformed or unusable input data (bad CSV cell, zero-norm row, ...).
    #[error("data error: {0}")]
    Data(String),
    /// Training failure (non-finite loss or gradient).
    #[error("training error: {0}")]
    Training(String),
    /// Numerical failure or diagnostic condition (non-convergence,
    /// insufficient exceedances, rejected resampling, ...).
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A resource budget was exceeded; the message suggests a remedy.
    #[error("budget error: {0}")]
    Budget(String),
    /// Filesystem failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code: 2 for configuration problems, 3 for data/input
    /// problems, 4 for numerical or training failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) | Error::Domain(_) | Error::Shape(_) => 3,
            Error::Training(_) | Error::Numerical(_) | Error::Budget(_) => 4,
        }
    }
}
