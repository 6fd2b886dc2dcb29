use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension {dim} is constant (min = max = {value}); cannot normalize")]
    ConstantColumn { dim: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all {0} values are identical; the support has zero width")]
    ZeroWidthSupport(usize),

    #[error("value {value} lies outside the partition range [{lower}, {upper}]")]
    OutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("local design in {dims} dimensions needs 2^{dims} vertices; the cap is {cap} dimensions")]
    DesignTooLarge { dims: usize, cap: usize },

    #[error("singular normal matrix in least-squares solve")]
    SingularDesign,

    #[error("predictor returned a non-finite value {value} at batch position {index}")]
    NonFiniteOutput { index: usize, value: f64 },

    #[error("predictor returned {actual} values for {expected} points")]
    OutputLength { expected: usize, actual: usize },

    #[error("unknown benchmark function `{0}`")]
    UnknownFunction(String),

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    TrainingDiverged { iteration: usize, loss: f64 },

    #[error("external predictor `{command}`: {message}")]
    External { command: String, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
