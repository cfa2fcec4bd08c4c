use std::path::PathBuf;

use crate::nqp::SolveResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative diagonal entry {value} at index {index}; not a Gram matrix")]
    NegativeDiagonal { index: usize, value: f64 },

    #[error("passive subsystem is singular even after diagonal perturbation (size {size})")]
    Singular { size: usize },

    /// A NaN or infinity showed up mid-solve. The partial result carries the
    /// trace recorded up to that point.
    #[error("numeric failure at iteration {iteration}: {reason}")]
    NumericFailure {
        iteration: usize,
        reason: String,
        partial: Box<SolveResult>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
