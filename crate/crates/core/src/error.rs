use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("undefined polar angle: query point coincides with the pole")]
    UndefinedAngle,
    #[error("empty histogram: region contains no pixels besides the pole")]
    EmptyHistogram,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("index error: {0}")]
    Index(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
