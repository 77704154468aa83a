use crate::eigen::Spectrum;
use crate::geometry::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("tensor is not positive definite at ({x}, {y}): smallest eigenvalue {min_eigenvalue}", x = .point[0], y = .point[1])]
    NotSpd { point: Point, min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector has zero {0}-norm")]
    ZeroVector(&'static str),

    #[error("requested {requested} eigenpairs but the problem has dimension {dimension}")]
    TooManyEigenpairs { requested: usize, dimension: usize },

    #[error("dense oracle refuses dimension {dimension} (limit {limit})")]
    TooLarge { dimension: usize, limit: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations ({converged} of {requested} pairs converged)")]
    NotConverged { iterations: usize, converged: usize, requested: usize, partial: Box<Spectrum> },

    #[error("nonpositive shifted eigenvalue {sigma1} (C0 = {c0}); constants are inconsistent with the spectrum")]
    NonPositiveSigma { sigma1: f64, c0: f64 },

    #[error("{0}")]
    InsufficientEigenvalues(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
