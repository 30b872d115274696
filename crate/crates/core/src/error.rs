use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { what: String, min_eigenvalue: f64 },

    #[error("insufficient moments: need S_0..S_{needed}, have S_0..S_{have}")]
    InsufficientMoments { needed: usize, have: usize },

    #[error("wrong parity: {0}")]
    WrongParity(String),

    #[error("moment problem is not solvable; failed: {}", failed.join(", "))]
    Unsolvable { failed: Vec<String> },

    #[error("operator A ill-defined: well-definedness residual {residual:e} exceeds {tol:e}")]
    IllDefinedOperator { residual: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular resolvent: {0}")]
    SingularResolvent(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
