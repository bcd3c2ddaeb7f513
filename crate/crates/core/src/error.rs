//! Crate-wide error type.
//!
//! Recoverable failures (I/O, malformed files, infeasible configurations,
//! numerical divergence) are reported through [`Error`]. Programmer errors
//! such as shape mismatches in the autodiff layer panic instead, with both
//! offending shapes in the message.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized artifact (checkpoint, dataset) failed validation.
    #[error("format: {0}")]
    Format(String),

    /// A configuration is rejected before any work is done.
    #[error("config: {0}")]
    Config(String),

    /// A numeric quantity that must stay finite did not.
    #[error("non-finite: {0}")]
    NonFinite(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
