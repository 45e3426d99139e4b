use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cut locus reached: distance {dist} >= injectivity radius {inj}")]
    CutLocusReached { dist: f64, inj: f64 },
    #[error("range violation: {0}")]
    RangeViolation(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("smooth gradient requires eps > 0")]
    RequiresPositiveEps,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
