//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("tridiagonal coupling must satisfy |rho| < 1/2, got {0}")]
    InvalidRho(f64),
    #[error("covariance diagonal entry {index} is {value}, expected 1")]
    NonUnitDiagonal { index: usize, value: f64 },
    #[error("entry ({row},{col}) = {value} lies outside [-1, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("ties detected in column {column}")]
    TiesDetected { column: usize },
    #[error("zero difference at coordinate {coord}; the sign is undefined")]
    ZeroDifference { coord: usize },
    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("Stieltjes solve left the upper half-plane at z = {re} + {im}i")]
    WrongHalfPlane { re: f64, im: f64 },
    #[error("aspect ratio must be positive, got {0}")]
    InvalidAspect(f64),
    #[error("not a CDF: {0}")]
    NotACdf(String),
    #[error("density normalization failed: total mass {0}")]
    NormalizationFailure(f64),
    #[error("no theoretical law available: {0}")]
    UnsupportedLaw(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
