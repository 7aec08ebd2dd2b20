use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node} is out of range for a graph on {m} nodes")]
    NodeOutOfRange { node: usize, m: usize },

    #[error("p-value at position {index} is {value}, outside [0, 1]")]
    InvalidPValue { index: usize, value: f64 },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An exact independent-set enumeration would exceed the configured limit.
    /// `component` is the smallest node id (0-based, original numbering) of the
    /// offending component.
    #[error(
        "component containing node {component} has {size} nodes, \
         exceeding the enumeration guard of {limit}"
    )]
    GuardExceeded {
        component: usize,
        size: usize,
        limit: usize,
    },

    #[error(
        "component containing node {component} has more than {limit} maximal independent sets"
    )]
    TooManySets { component: usize, limit: usize },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
