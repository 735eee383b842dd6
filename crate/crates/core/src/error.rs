use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A factorization, inversion or quadrature did not reach its target.
    /// `bound` carries the best error bound or diagnostic value achieved.
    #[error("numerical failure: {message} (bound {bound:e})")]
    Numerical { message: String, bound: f64 },

    #[error("oracle failure: {0}")]
    Oracle(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, bound: f64) -> Self {
        Error::Numerical {
            message: msg.into(),
            bound,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
