use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Request would materialize more letters than the configured cap.
    #[error("capacity error: {requested} letters requested, limit is {limit}")]
    Capacity { requested: String, limit: usize },

    /// An exact-arithmetic identity that must hold did not.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
