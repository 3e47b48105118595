use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured resource cap (size of x, table, enumeration, breakpoints) would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    /// Adaptive quadrature failed to settle on the worst subinterval.
    #[error("quadrature did not converge on [{lo}, {hi}]: last change {change:e}")]
    Numerical { lo: f64, hi: f64, change: f64 },
    /// A table failed its accuracy certification.
    #[error("certification failed: {0}")]
    Certification(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn resource(msg: impl Into<String>) -> Error {
    Error::Resource(msg.into())
}
