//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Determinant too small relative to the matrix scale to invert safely.
    #[error("matrix is numerically singular (det = {det:.3e})")]
    SingularMatrix { det: f64 },

    /// An operation that requires a specific rank saw a different one.
    #[error("operation requires a rank-{expected} matrix, got rank {got}")]
    RankError { expected: u8, got: u8 },

    /// Input outside the domain of a map (coordinates, angles, thresholds).
    #[error("domain error: {0}")]
    DomainError(String),

    /// The point is at a pole, where the cylinder map has no inverse.
    #[error("point is at a pole of the sphere; the inverse map is undefined there")]
    PoleError,

    /// Cap with |t| >= 1 has an empty or degenerate boundary circle.
    #[error("cap boundary is degenerate (t = {t})")]
    DegenerateCap { t: f64 },

    /// A curve-cell bound was requested for a polyline that never declared
    /// how many convex pieces it decomposes into.
    #[error("polyline does not declare its convex piece count; attach one with with_convexity")]
    MissingConvexityData,

    /// Exact discrepancy was requested for a set above the enumeration limit.
    #[error("point set too large for exact mode (N = {n}, limit {limit}); use the estimator")]
    TooLarge { n: usize, limit: usize },

    /// Separation distance needs at least two points.
    #[error("need at least {need} points, got {got}")]
    TooFew { need: usize, got: usize },

    /// Malformed or inconsistent configuration or input data.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// I/O failure while reading or writing a data file.
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: &std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
