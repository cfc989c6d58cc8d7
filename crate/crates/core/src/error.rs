use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("segment is horizontal; its extension and horizontal distances are undefined")]
    HorizontalSegment,

    #[error("segment endpoints coincide")]
    DegenerateSegment,

    #[error("segment endpoint outside the slab 0 <= y <= 1")]
    OutsideUnitSlab,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tolerance exceeded: {0}")]
    ToleranceExceeded(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
