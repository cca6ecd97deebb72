use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector has dimension 0")]
    EmptyVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("anchor {anchor} has no positive in the batch")]
    EmptyPositiveSet { anchor: usize },

    #[error("batch size mismatch: current has {current} views, past has {past}")]
    BatchMismatch { current: usize, past: usize },

    #[error("distillation coefficient must be non-negative, got {0}")]
    NegativeLambda(f64),

    #[error("gamma is zero for task {task}; the bound coefficient 1/gamma is undefined")]
    ZeroGamma { task: usize },

    #[error("non-finite gradient component at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("accumulated contrastive loss is zero before task {task}; the lambda ratio is undefined")]
    DegenerateRatio { task: usize },

    #[error("task {task} has no training samples")]
    EmptyTask { task: usize },

    #[error("bad magic number in {file}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        file: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("truncated {what}: needed {needed} bytes, {available} available")]
    Truncated {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
