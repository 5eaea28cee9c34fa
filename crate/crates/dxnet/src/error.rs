use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DxError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DxError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: unsupported audio format: {reason}")]
    AudioFormat { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dxnet_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl DxError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DxError::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad invocation rather than bad data.
    pub fn is_usage(&self) -> bool {
        matches!(self, DxError::Usage(_))
    }
}
