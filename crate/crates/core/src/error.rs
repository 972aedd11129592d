use std::io;

use thiserror::Error;

/// Errors produced anywhere in the tracking stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A scenario or configuration failed validation.
    #[error("validation failed: {0}")]
    Validation(String),
    /// The appearance model could not produce a usable response.
    #[error("tracking failure: {0}")]
    TrackingFailure(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
