use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("undefined limit: {0}")]
    UndefinedLimit(String),
    #[error("atom count {count} exceeds the policy cap {cap}; switch to the population engine or enable quantization")]
    AtomExplosion { count: usize, cap: usize },
    #[error("per-atom dominance violated at L = {value}: w0 = {w0}, w1 = {w1}")]
    DominanceViolation { value: f64, w0: f64, w1: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("degenerate event: P(B) = {0}")]
    DegenerateEvent(f64),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("node {0} does not have a full neighbourhood in the truncated tree")]
    NotInterior(usize),
    #[error("bad bracket: {0}")]
    BadBracket(String),
    #[error("monotone regime violated: {0}")]
    MonotonicityViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
