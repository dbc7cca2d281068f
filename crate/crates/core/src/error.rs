use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size {requested} exceeds the configured cap of {cap} points")]
    SizeCap { requested: u128, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular energy: points {i} and {j} coincide and r_min = 0")]
    Singularity { i: usize, j: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("precondition unmet: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
