use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("quadrature resolution {got} is below the required {need}")]
    Quadrature { got: usize, need: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}
