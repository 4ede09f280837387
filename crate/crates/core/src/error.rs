use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pattern edge ({0}, {1}): {2}")]
    InvalidEdge(usize, usize, &'static str),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("pattern literal parse error: {0}")]
    PatternSyntax(String),

    #[error("size limit exceeded: {what} is {actual}, limit {limit}")]
    SizeLimit {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {time} outside [0, {horizon}]")]
    TimeOutOfRange { time: f64, horizon: f64 },

    #[error("checkpoint times are not sorted")]
    UnsortedTimes,

    #[error("vertex label {label} out of range for n = {n}")]
    LabelOutOfRange { label: usize, n: usize },

    #[error("type value {value} outside feasible region [0, {upper}]")]
    TypeDomain { value: f64, upper: f64 },

    #[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
