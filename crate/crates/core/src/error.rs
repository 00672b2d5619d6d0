use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a valid state: {0}")]
    InvalidState(String),

    /// The map fails complete positivity (its Choi matrix has a negative eigenvalue).
    #[error("map is not completely positive: min Choi eigenvalue {min_eigenvalue:e}")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("not a CPTP map: {0}")]
    NotCptp(String),

    #[error("problem too large for the dense path: {0}")]
    TooLarge(String),

    /// Two independent routes to the same quantity disagree.
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn mismatch(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
