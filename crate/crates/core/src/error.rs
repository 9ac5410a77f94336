//! Error type shared by every module in the crate.

use nalgebra::DVector;
use num_complex::Complex64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, AmpError>;

/// Everything that can go wrong across measurement synthesis, solvers and
/// the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum AmpError {
    /// A scalar or structural argument is outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Two arguments disagree on dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A numeric routine produced NaN/Inf or an unsolvable system.  When an
    /// iterative solver blows up, `last_iterate` carries the last finite
    /// iterate so callers can inspect how far it got.
    #[error("numerical failure: {reason}")]
    Numerical {
        reason: String,
        last_iterate: Option<DVector<Complex64>>,
    },

    /// Experiment configuration rejected; the message names the offending key.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl AmpError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        AmpError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(reason: impl Into<String>) -> Self {
        AmpError::Numerical {
            reason: reason.into(),
            last_iterate: None,
        }
    }
}
