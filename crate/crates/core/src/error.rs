use thiserror::Error;

/// Errors raised by the library. Each variant maps to one CLI exit code.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed input: out-of-range vertex or color, bad file, mismatched sizes.
    #[error("input error: {0}")]
    Input(String),
    /// Parameters outside the domain of a formula, e.g. `k <= d + 2`.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structural invariant was violated, e.g. a non-monotone probability vector.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// The problem is too large or a step cap was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// An API was used out of order.
    #[error("usage error: {0}")]
    Usage(String),
    /// The linear program has no feasible point.
    #[error("linear program is infeasible")]
    Infeasible,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
