use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    Length { left: usize, right: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("basis error: {0}")]
    Basis(String),

    #[error("correlation matrix is not positive definite after jitter up to {max_jitter:e}")]
    Singular { max_jitter: f64 },

    #[error("rank deficient: {0}")]
    Rank(String),

    #[error("Fisher information determinant is not positive ({0:e})")]
    NonPositiveDet(f64),

    #[error("optimizer failed: {0}")]
    OptFailure(String),

    #[error("query {value} is outside [{lower}, {upper}]")]
    OutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("no sign change found while bracketing: {0}")]
    Bracket(String),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("slope {0:e} is too close to zero")]
    NearZeroSlope(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad user input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::Degenerate(_)
                | Error::Domain(_)
                | Error::Dimension { .. }
                | Error::Length { .. }
                | Error::OutOfRange { .. }
                | Error::TooFewPoints { .. }
        )
    }
}
