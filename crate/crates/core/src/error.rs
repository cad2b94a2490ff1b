use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument {z} is within {distance:e} of a pole of the quantum dilogarithm")]
    PoleProximity { z: String, distance: f64 },

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("(p, q) = ({p}, {q}) is excluded: the slopes (+-1, 0) give S^3 itself")]
    ExcludedSlope { p: i64, q: i64 },

    #[error("linking matrix is singular (nullity {nullity})")]
    SingularLinkingMatrix { nullity: usize },

    #[error("point ({x}, {y}) lies outside region {region}")]
    RegionViolation { region: String, x: String, y: String },

    #[error(
        "precision exhausted: cancellation needs {needed:.1} digits but only {available:.1} are available"
    )]
    PrecisionExhausted { needed: f64, available: f64 },

    #[error("continuation diverged after theta = {last_good}: {reason}")]
    ContinuationFailed { last_good: f64, reason: String },

    #[error("left the geometric branch: {0}")]
    NonGeometric(String),

    #[error("quadrature resolution exceeded: {0}")]
    Resolution(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
