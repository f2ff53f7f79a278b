use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A request whose cost would blow past the configured guard.
    #[error("refused, problem too large: {0}")]
    RefusedTooLarge(String),

    /// A diagonal or skeleton block hit an exactly zero pivot.
    #[error("singular {what} block at level {level}, node {node}")]
    SingularBlock {
        what: &'static str,
        level: usize,
        node: usize,
    },

    #[error("iteration did not converge after {iterations} steps (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
