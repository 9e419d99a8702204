use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("recordings shorter than one analysis frame: indices {0:?}")]
    ShortRecordings(Vec<usize>),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(i64),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for failures caused by the training data itself rather than by
    /// malformed files or arguments.
    pub fn is_training_failure(&self) -> bool {
        matches!(self, Error::SingleClass | Error::ShortRecordings(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
