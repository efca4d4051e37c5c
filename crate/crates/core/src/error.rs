use alloc::string::String;

/// Errors raised by the core engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: expected {expected} vertices, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown node attribute `{0}`")]
    UnknownAttribute(String),
    #[error("node attribute `{name}` has {found} entries, expected {expected}")]
    AttributeLength { name: String, expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge count {m} outside [0, {max}]")]
    EdgeCountOutOfRange { m: usize, max: usize },
    #[error("infeasible target fraction {0}")]
    InfeasibleFraction(f64),
    #[error("missingness model needs a conditioning network")]
    MissingNetwork,
    #[error("exact enumeration refused for n = {0} (limit 5)")]
    EnumerationTooLarge(usize),
    #[error("invalid pair mechanism: {0}")]
    InvalidMechanism(String),
    #[error("baseline estimation failed: {0}")]
    BaselineFailed(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
