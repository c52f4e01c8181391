//! Error type shared by all modules.

use std::path::Path;

/// Errors produced by parsing, validation, and numerical routines.
///
/// The variants are grouped so that callers (notably the CLI) can map them
/// to coarse failure categories: `Parse`/`Io`/`Invalid` are data problems,
/// `Numeric` signals a failure inside a numerical algorithm.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A text input could not be parsed; reports the offending line.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Underlying I/O failure.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Inputs violate a documented precondition or invariant.
    #[error("{0}")]
    Invalid(String),

    /// A numerical routine failed (non-finite values, indefinite matrix, ...).
    #[error("{0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
