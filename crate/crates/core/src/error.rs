use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("value overflows f64 ({0}); use the log-space accessor")]
    Overflow(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("series did not converge after {terms} terms: {detail}")]
    NonConvergence { terms: usize, detail: String },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("derivative of order {0} is not available")]
    DerivativeOrder(usize),

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("moment backend cannot serve this request: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
