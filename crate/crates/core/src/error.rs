use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid scene `{scene}`: {reason}")]
    InvalidScene { scene: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("shape mismatch at layer {layer}: {detail}")]
    Shape { layer: usize, detail: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("placement outside the floor polygon at ({x:.3}, {y:.3})")]
    OutsideFloor { x: f64, y: f64 },

    #[error("rejection sampling gave up after {0} draws")]
    SamplingExhausted(usize),

    #[error("augmentation rejected: {0}")]
    AugmentRejected(String),

    #[error("schema error in {source_name}: {violations:?}")]
    Schema { source_name: String, violations: Vec<String> },

    #[error("parse error in {source_name}: {detail}")]
    Parse { source_name: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
