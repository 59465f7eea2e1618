//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for an op.
    #[error("{op}: incompatible shapes {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// An op was asked to do something it does not support
    /// (bad axis, bad attribute combination, wrong rank).
    #[error("unsupported op: {0}")]
    UnsupportedOp(String),

    /// An API precondition was violated (non-scalar loss, missing
    /// gradient on a registered parameter, duplicate parameter name).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Checkpoint file could not be parsed.
    #[error("checkpoint parse error: {0}")]
    CheckpointParse(String),

    /// Weight migration failed (shape mismatch on a mapped pair,
    /// missing source tensor).
    #[error("migration error: {0}")]
    Migration(String),

    /// Invalid configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric failure at runtime (NaN/Inf loss).
    #[error("numeric failure in {component}: {detail}")]
    Numeric { component: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
