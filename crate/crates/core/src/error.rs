//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cube not aligned to the lattice: {0}")]
    UnalignedCube(String),

    #[error("cube outside the domain box: {0}")]
    OutsideDomain(String),

    #[error("generator hits a singularity at a sample point: {0}")]
    SingularSample(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("real-valued input required: {0}")]
    ComplexInput(String),

    #[error("kernel evaluated at a singular point: {0}")]
    KernelSingularity(String),

    #[error("non-finite value produced: {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed grid-function file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
