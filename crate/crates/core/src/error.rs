use thiserror::Error;

use crate::lp::LpError;
use crate::model::ModelError;

/// Errors surfaced by the pruning and dynamic-programming machinery.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("vector set would exceed the cap of {cap} vectors ({requested} requested)")]
    CapExceeded { cap: usize, requested: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = SolveError> = std::result::Result<T, E>;
