use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulator, learner and run harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (bad action range, shape mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Training produced a NaN or infinity; carries the update index where it happened.
    #[error("non-finite value in {what} at update {step}")]
    NonFinite { what: String, step: u64 },

    #[error("corrupt checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
