use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: operands sampled on different grids")]
    GridMismatch,

    #[error("iteration did not converge within {max_iter} steps (last shift change {last_shift_change:.3e}, last sup diff {last_sup_diff:.3e})")]
    NonConvergence {
        max_iter: usize,
        last_shift_change: f64,
        last_sup_diff: f64,
    },

    #[error("iterate violates required shape: {0}")]
    ShapeViolation(String),

    #[error("outside proven regime: {0}")]
    Regime(String),

    #[error("insufficient iteration history: {0}")]
    InsufficientHistory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
