use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error("matrix is not symmetric: entry ({row},{col}) = {value} but mirror = {mirror}")]
    Asymmetric {
        row: usize,
        col: usize,
        value: f64,
        mirror: f64,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("line search found no convex branch to bracket the step")]
    BracketFailure,

    #[error("solver diverged at iteration {iter}: {reason}")]
    Divergence { iter: usize, reason: String },

    #[error("rank deficiency during orthonormalization at iteration {iter}")]
    Deflation { iter: usize },

    #[error("block eigensolver became unstable at iteration {iter}: {reason}")]
    Instability { iter: usize, reason: String },

    #[error("dense oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("insufficient data for rate fit: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
