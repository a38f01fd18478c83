//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the pipeline library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid caller-supplied configuration (bad parameter ranges, unknown
    /// names, malformed manifests).
    #[error("config: {0}")]
    Config(String),

    /// Malformed or inconsistent input data (schema violations, undefined
    /// quantities on the given data, unparseable cells).
    #[error("data: {0}")]
    Data(String),

    /// I/O failure while reading or writing artifacts.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// CSV-level parse or write failure.
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// JSON (de)serialization failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Internal invariant violation; indicates a bug, not bad input.
    #[error("internal: {0}")]
    Internal(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
