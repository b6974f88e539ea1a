use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the detector pipeline and its supporting modules.
#[derive(Debug, Error)]
pub enum DmkdeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("class {class} has {count} samples, too few to populate every split")]
    InsufficientClass { class: u8, count: usize },

    #[error("dimension mismatch: data has {found} features, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate embedding: every Fourier feature evaluated to zero")]
    DegenerateEmbedding,

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = DmkdeError> = std::result::Result<T, E>;

impl DmkdeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DmkdeError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        DmkdeError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
