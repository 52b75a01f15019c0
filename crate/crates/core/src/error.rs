use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A time, level or horizon outside what the noise store or model supports.
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("index {index} out of range (limit {limit})")]
    Index { index: usize, limit: usize },
    #[error("ordering error: start {start} is after end {end}")]
    Ordering { start: f64, end: f64 },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("non-finite state: {0}")]
    NonFinite(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("divergence at step {step}: {reason}")]
    Divergence { step: usize, reason: String },
    #[error("iteration did not converge after {iterations} iterations")]
    Iteration { iterations: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("enumeration depth {depth} exceeds limit {limit}")]
    DepthLimit { depth: usize, limit: usize },
    #[error("independence precondition fails on partition block {block:?}")]
    Independence { block: Vec<usize> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
