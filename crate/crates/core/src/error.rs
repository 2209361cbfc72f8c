use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("evaluation domain violation: {0}")]
    DomainViolation(String),

    #[error("boundary-value solve did not converge after {iterations} iterations (residual {residual:.3e}); target likely outside the injectivity region")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("composed operator is not a rotation (defect {defect:.3e})")]
    RotationDefect { defect: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Metric-file error with a 1-based source position.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

impl Error {
    /// Short machine-readable tag, used in JSON records and CLI output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NonFinite(_) => "non_finite",
            Error::DomainViolation(_) => "domain_violation",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Dimension { .. } => "dimension_mismatch",
            Error::RotationDefect { .. } => "rotation_defect",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse(_) => "parse_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
