use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed Borel set: {0}")]
    MalformedSet(String),

    #[error("invalid Lipschitz map t -> {slope}*t + {intercept}: {reason}")]
    InvalidMap {
        slope: f64,
        intercept: f64,
        reason: &'static str,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("test function undefined at t = {0}")]
    OutsideDomain(f64),

    #[error("matrix is singular or too ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },

    /// The contraction hypotheses of the requested solve are not met.
    #[error("solver refused: {0}")]
    Refused(String),

    #[error("measure is not in the zero-mass subspace (|mu(T)| = {0:e})")]
    NonzeroMass(f64),

    #[error("instance too large for brute-force oracle: {0}")]
    TooLarge(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
