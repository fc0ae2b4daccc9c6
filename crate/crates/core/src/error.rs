//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("Cholesky factorization failed: {context}")]
    Cholesky { context: String },

    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unknown cluster id {id} (clustering has {k} clusters)")]
    UnknownCluster { id: usize, k: usize },

    #[error("degenerate distance matrix: {0}")]
    Degenerate(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("zero oracle density at observation {index}")]
    ZeroDensity { index: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FoldError>;
