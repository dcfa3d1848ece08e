use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("value overflows the log-scaled range: {0}")]
    Overflow(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("singular matrix: pivot magnitude {pivot:e} at index {index}")]
    Singular { index: usize, pivot: f64 },
    #[error("expected a real log-determinant, got imaginary part {0:e}")]
    NonReal(f64),
    #[error("series does not converge (last term ratio {ratio:.3})")]
    SeriesDivergence { ratio: f64 },
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
