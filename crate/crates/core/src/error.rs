use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A search ran out of its step budget (or its counters would overflow).
    #[error("resource limit reached in {what}: {progress}")]
    ResourceLimit { what: String, progress: String },

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// A construction step failed for a specific binary string.
    #[error("while building node {sigma}: {source}")]
    Node {
        sigma: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True if this error (or the error it wraps) is a resource exhaustion.
    pub fn is_resource_limit(&self) -> bool {
        match self {
            Error::ResourceLimit { .. } => true,
            Error::Node { source, .. } => source.is_resource_limit(),
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
