use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corrupt corpus (sweep `{id}`): {reason}")]
    CorruptCorpus { id: String, reason: String },

    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("no convergence after {iterations} iterations (relative change {relative_change:.3e}, optimality residual {optimality:.3e})")]
    Convergence {
        iterations: usize,
        relative_change: f64,
        optimality: f64,
        /// Dense last iterate: codes (`n x (p - q + 1)`) from the code solver, bases from learning.
        last_iterate: Vec<Vec<f64>>,
    },

    #[error("stratification failure: {0}")]
    Stratification(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status: 2 configuration, 3 I/O or data integrity, 4 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Stratification(_) => 2,
            Error::CorruptCorpus { .. } | Error::CorruptFile { .. } | Error::Io { .. } => 3,
            Error::Convergence { .. } => 4,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
