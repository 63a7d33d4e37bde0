//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Graph parameters outside the supported range (e.g. `cycle(1)`).
    #[error("invalid size: {0}")]
    InvalidSize(String),

    /// Input data failed validation (negative mass, bad probability row, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A redistribution row is not a probability vector on the graph.
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },

    /// Operation is only defined for another graph family.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Enumeration or memory budget exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Not enough conditional samples to report a statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Numerical integration became unstable.
    #[error("integrator error: {0}")]
    Integrator(String),

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
