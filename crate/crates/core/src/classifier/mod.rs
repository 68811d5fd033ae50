//! Small residual CNN trained from scratch.

mod augment;
mod dataset;
mod model;
mod ops;
mod tensor;
mod train;

pub use augment::{augment, rotate_bilinear, AugmentSpec};
pub use dataset::{LabeledDataset, Provenance, Split};
pub use model::{
    argmax, cross_entropy, ClassifierModel, ForwardOutput, Gradients, ModelConfig, SampleCache,
    PARAM_NAMES,
};
pub use ops::softmax;
pub use tensor::Tensor;
pub use train::{
    evaluate, evaluate_split, train, train_with_progress, AccuracyTrace, EpochStats, Evaluation,
    TrainConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at index {index} after {stage}")]
    NonFinite { stage: String, index: usize },
    #[error("training diverged in epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
