use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("neuron {0} is a sensor and cannot be flipped")]
    SensorNeuron(usize),

    #[error("neuron index {index} out of range for a network of {n} neurons")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("parents have different topology masks")]
    MaskMismatch,

    #[error("population size {found} does not match configured size {expected}")]
    PopulationSize { expected: usize, found: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
