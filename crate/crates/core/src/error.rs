use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("label {label:?} has {available} same-label neighbors, need at least {needed}")]
    InsufficientSamples {
        label: String,
        available: usize,
        needed: usize,
    },

    #[error("parse error at row {row}, column {column}: {msg}")]
    Parse {
        row: usize,
        column: usize,
        msg: String,
    },

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("did not converge after {iters} iterations (residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical routine rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::NonConvergence { .. })
    }
}
