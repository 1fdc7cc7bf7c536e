//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by shape checks, argument validation and IO.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A scalar argument is out of its valid range.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Configuration objects are internally inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
