use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("eigensolver did not converge (matrix norm {norm:e})")]
    EigenNoConvergence { norm: f64 },

    #[error("eigenvalue {eigenvalue:e} is outside the domain of {function}")]
    Domain { function: String, eigenvalue: f64 },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state space mismatch")]
    SpaceMismatch,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel is not unital (deviation {0:e})")]
    NotUnital(f64),

    #[error("generator does not conserve mass (deviation {0:e})")]
    MassNotConserved(f64),

    #[error("measure is not invariant (deviation {0:e})")]
    NotInvariant(f64),

    #[error("ratio is undefined: {0}")]
    UndefinedRatio(String),

    #[error("non-unique stationary measure: kernel is reducible (null space dimension {0})")]
    Reducible(usize),

    #[error("no feasible candidate found: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
