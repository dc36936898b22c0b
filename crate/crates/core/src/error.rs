use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("tensor factor index {index} out of range for {factors} factors")]
    IndexOutOfRange { index: usize, factors: usize },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("operator is singular (min eigenvalue {min_eigenvalue:.3e})")]
    Singular { min_eigenvalue: f64 },

    #[error("not a density operator: {0}")]
    NotAState(String),

    #[error("generator list is empty")]
    EmptyGenerators,

    #[error("algebra is not closed under products (residual {residual:.3e})")]
    ClosureViolation { residual: f64 },

    #[error("random spectra stayed degenerate after {attempts} attempts: {detail}")]
    DegeneracyRetryExceeded { attempts: usize, detail: String },

    #[error("matrix is not antisymmetric (residual {residual:.3e})")]
    NotAntisymmetric { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("rejection sampler exceeded {max_rejects} rejections")]
    MaxRejectsExceeded { max_rejects: usize },

    #[error("input is not a Gaussian state: {0}")]
    NonGaussianInput(String),

    #[error("truncation tail weight {tail:.3e} exceeds tolerance {tol:.3e}")]
    TruncationTolerance { tail: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
