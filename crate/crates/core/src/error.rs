use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what} row {row}: expected {expected} columns, got {got}")]
    Dimension {
        what: &'static str,
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("constraint system is infeasible")]
    Infeasible,

    #[error("problem admits arbitrarily large solutions")]
    Unbounded,

    #[error("all variables forced to zero")]
    AllZero,

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("KKT inconsistency: multiplier {value:.3e} on inequality row {row}")]
    Kkt { row: usize, value: f64 },

    #[error("{0}")]
    Condition(String),

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("enumeration budget of {budget} nodes exceeded at prefix {frontier:?}")]
    Budget { budget: u64, frontier: Vec<u64> },

    #[error("problem file: {0}")]
    Format(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
