//! Differentiable layers, weighted cross-entropy, SGD and gradient checking.

pub mod checkpoint;
pub mod gradcheck;
mod kernels;
pub mod loss;
mod network;
pub mod ops;
pub mod optim;
pub mod params;
pub mod sequential;

use thiserror::Error;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::{GradCheckConfig, GradCheckReport, Probe};
pub use loss::{weighted_cross_entropy, LossWeights, EVENT_LOSS_WEIGHTS};
pub use network::Network;
pub use ops::{
    conv1d_forward, fc_softmax_forward, maxpool_forward, relu_forward, softmax, ArgmaxRecord,
};
pub use optim::{Adam, Optimizer, OptimizerKind, Sgd};
pub use params::{GradBuffer, ParamId, ParamStore};
pub use sequential::{count_params, infer_shape, LayerSpec, Sequential, Trace};

use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{what}: expected {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("input shape {actual:?} does not match expected {expected:?}")]
    InputShape {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("backward called before forward")]
    BackwardBeforeForward,
    #[error("trace does not belong to this layer stack")]
    TraceMismatch,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid loss weights: {0}")]
    InvalidLossWeights(String),
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
    #[error("momentum must lie in [0, 1), got {0}")]
    InvalidMomentum(f64),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
