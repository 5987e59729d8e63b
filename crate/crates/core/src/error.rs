use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ambiguous tone match for ({f1} Hz, {f2} Hz) at tolerance {tol} Hz")]
    Ambiguous { f1: f64, f2: f64, tol: f64 },

    #[error("recording too short: {samples} samples, frame size {frame_size}")]
    TooShort { samples: usize, frame_size: usize },

    #[error("feature vector overlong: natural length {natural} exceeds target {target}")]
    Overlong { natural: usize, target: usize },

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("malformed data in {path:?}: {reason}")]
    Data { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the CLI: 2 for bad configuration or
    /// arguments, 3 for unreadable or inconsistent data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn data(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
