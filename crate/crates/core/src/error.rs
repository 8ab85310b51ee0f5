//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A computation would exceed a hard resource limit (e.g. an enumeration
    /// with too many terms).
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An estimator could not be evaluated (e.g. an empty treatment arm).
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A file did not parse as the expected format.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: argument errors exit 2, resource
    /// errors exit 3, everything else 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) => 2,
            Error::Resource(_) => 3,
            _ => 1,
        }
    }
}
