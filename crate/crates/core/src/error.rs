//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the detection pipeline and its supporting machinery.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Dataset ingestion or on-disk artifact problems (missing/corrupt files,
    /// malformed masks, layout violations).
    #[error("data error: {0}")]
    Data(String),

    /// I/O failure with the offending path attached.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Invalid configuration or argument values.
    #[error("invalid config: {0}")]
    Config(String),

    /// Model training could not proceed (degenerate sample sets, exhausted
    /// negative pools, calibration preconditions).
    #[error("training error: {0}")]
    Training(String),

    /// Evaluation preconditions violated (no annotations, single-class ROC).
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
