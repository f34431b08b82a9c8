use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degree error: {0}")]
    Degree(String),

    #[error("invalid Lie algebra data: {0}")]
    LieData(String),

    #[error("representation axiom failed: {0}")]
    Representation(String),

    #[error("basis size {size} exceeds the configured cap of {cap} monomials")]
    BasisSize { size: usize, cap: usize },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("flow error: {0}")]
    Flow(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("jet is not invertible: {0}")]
    NotInvertible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
