use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Input data violates a series invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("initial guess failed: {0}")]
    Guess(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("non-finite function value at t = {0}")]
    NonFinite(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
