use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Panel doubling did not reach the requested tolerance.
    #[error("quadrature did not converge within {panels} panels (last estimates {last:e} and {previous:e})")]
    Convergence {
        last: f64,
        previous: f64,
        panels: usize,
    },

    /// A computation would exceed a hard size guard.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The spectral box is too small and the evolved state reaches its edge.
    #[error("domain too small: {0}")]
    DomainSize(String),

    /// Two routes that must agree do not; this indicates a bug.
    #[error("consistency error: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
