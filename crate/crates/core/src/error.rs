use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric at entry ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("symmetric eigensolver did not converge (n = {0})")]
    EigenNoConvergence(usize),

    #[error("matrix is not positive semidefinite: smallest eigenvalue {0:e}")]
    NotPsd(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("point is outside the unit box: eigenvalues span [{min_eig:e}, {max_eig:e}]")]
    Infeasible { min_eig: f64, max_eig: f64 },

    #[error("objective evaluated outside its domain: {0}")]
    Domain(String),

    #[error("numeric inconsistency: {0}")]
    Inconsistent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
