use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("points are affinely dependent: rank {rank} in dimension {dim}")]
    DegenerateInput { dim: usize, rank: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("point lies outside the tessellated hull (min barycentric {min_weight:e})")]
    OutsideHull { min_weight: f64 },
    #[error("no edge admits a volume-adding collapse")]
    NoFeasibleCollapse,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vertex {0} is not a hull vertex")]
    BadVertex(usize),
    #[error("qhull failed: {0}")]
    Qhull(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("image has fewer than 4 distinct colors")]
    DegenerateImage,
    #[error("invalid angle: {0}")]
    InvalidAngle(String),
    #[error("no harmonic template has every axis populated")]
    NoValidTemplate,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
