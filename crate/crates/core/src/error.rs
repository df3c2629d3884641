use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("ellipticity violated: {0}")]
    Ellipticity(String),

    #[error("potential model rejected: {0}")]
    ModelRejected(String),

    #[error("circulant embedding failed: negative eigenvalue mass {negative_fraction:.3e} at torus side {side}")]
    Embedding { negative_fraction: f64, side: usize },

    #[error("non-finite quadrature: {0}")]
    NonFinite(String),

    #[error("assembly inconsistency: {0}")]
    Inconsistent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
