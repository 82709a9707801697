use thiserror::Error;

/// Errors raised by model construction, problem builders and certificate checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid degree distribution: {0}")]
    InvalidDistribution(String),

    #[error("erasure probability {0} is outside the admissible range {1}")]
    InvalidEpsilon(f64, &'static str),

    #[error("lift degree bound {bound} is smaller than the polynomial degree {degree}")]
    DegreeBound { bound: usize, degree: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed conic problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
