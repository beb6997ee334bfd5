//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by space construction, model building, and evolution.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown level `{level}` on slot {slot}")]
    UnknownLevel { slot: usize, level: String },

    #[error("slot {0} is not a bosonic mode")]
    NotAMode(usize),

    #[error("slot {0} is not an atom")]
    NotAnAtom(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("herald impossible: projection probability {prob:.3e} below threshold")]
    HeraldImpossible { prob: f64 },

    #[error(
        "singular linear system in effective-operator inversion (condition estimate {cond:.3e})"
    )]
    SingularBlock { cond: f64 },

    #[error("pole encountered in closed-form evaluation: {0}")]
    ClosedFormPole(String),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("degenerate protocol parameters: {0}")]
    DegenerateProtocol(String),

    #[error("linear-algebra backend error: {0}")]
    Linalg(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl From<ndarray_linalg::error::LinalgError> for SimError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        SimError::Linalg(e.to_string())
    }
}
