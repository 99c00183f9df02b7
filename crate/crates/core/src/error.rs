use thiserror::Error;

/// Errors raised by the channel model, the policy solvers and the I/O helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The argument lies outside the real domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series coefficient overflowed; indices name the offending term.
    #[error("numerical overflow in series term (i={i}, h={h}, t={t})")]
    NumericalOverflow { i: usize, h: usize, t: usize },

    #[error("infeasible plan: {0}")]
    Infeasible(String),

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: String, iterations: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
