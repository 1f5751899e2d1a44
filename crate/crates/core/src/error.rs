use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum SimileError {
    #[error("time index {t} out of range 1..={len}")]
    Index { t: usize, len: usize },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: no rows")]
    Empty { path: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular normal equations (use ridge > 0): {0}")]
    Singular(String),

    #[error("empty node: split search produced a child without samples")]
    EmptyNode,

    #[error("contraction violated: gamma = {gamma} >= 1")]
    ContractionViolated { gamma: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported document: {0}")]
    Format(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SimileError> = std::result::Result<T, E>;

impl SimileError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimileError::Io {
            path: path.into(),
            source,
        }
    }
}
