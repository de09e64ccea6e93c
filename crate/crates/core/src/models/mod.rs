//! The shared-compare event network, the stacked team network, agent
//! orderings and architecture configs.

pub mod config;
pub mod ordering;
pub mod shared_compare;
pub mod stacked;

use thiserror::Error;

pub use config::{
    ModelSpec, SharedCompareConfig, StackedConfig, SweepVariant, BASE_FILTER_VARIANTS,
    DEPTH_VARIANTS, FC_TAIL_WIDTH, FILTER_SIZE_VARIANTS,
};
pub use ordering::{ball_order, center_index, proximity_order, PersonOrdering};
pub use shared_compare::SharedCompareNet;
pub use stacked::StackedNet;

use crate::data::DataError;
use crate::nn::gradcheck::check_params;
use crate::nn::{
    GradBuffer, GradCheckConfig, GradCheckReport, LossWeights, NnError, ParamStore, Probe,
};
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input shape {actual:?} does not match expected {expected:?}")]
    InputShape {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("key agent {0} is absent for the whole window")]
    KeyAbsent(usize),
    #[error("no agent is present in the sample")]
    NoPresentPersons,
    #[error("possession has no ball track")]
    MissingBall,
    #[error("sample has no key agent")]
    MissingKey,
    #[error("{0:?} is not a permutation of the agent slots")]
    InvalidOrdering(Vec<usize>),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// What the training loop and evaluators need from either architecture.
pub trait TrajectoryModel: Send + Sync {
    type Sample: Sync;

    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    fn num_classes(&self) -> usize;
    fn label(&self, sample: &Self::Sample) -> usize;
    fn predict(&self, sample: &Self::Sample) -> Result<Vec<f64>, ModelError>;

    /// Adds the sample's weighted loss gradient into `grads` and returns the
    /// loss.
    fn loss_and_grad(
        &self,
        sample: &Self::Sample,
        weights: &LossWeights,
        grads: &mut GradBuffer,
    ) -> Result<f64, ModelError>;

    /// Loss and branch signature under substitute parameters.
    fn probe(
        &self,
        params: &ParamStore,
        sample: &Self::Sample,
        weights: &LossWeights,
    ) -> Result<Probe, ModelError>;
}

/// Finite-difference check of `model`'s analytic gradient on one sample.
pub fn gradient_check<M: TrajectoryModel>(
    model: &M,
    sample: &M::Sample,
    weights: &LossWeights,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport, ModelError> {
    let mut grads = GradBuffer::zeros_like(model.params());
    model.loss_and_grad(sample, weights, &mut grads)?;
    model.probe(model.params(), sample, weights)?;
    let mut params = model.params().clone();
    Ok(check_params(&mut params, &grads, cfg, |p| {
        model
            .probe(p, sample, weights)
            .expect("probe validated above")
    }))
}

/// Either network, built from its spec.
#[derive(Debug, Clone)]
pub enum Model {
    SharedCompare(SharedCompareNet),
    Stacked(StackedNet),
}

impl Model {
    pub fn build(spec: &ModelSpec, seed: u64) -> Result<Self, ModelError> {
        Ok(match spec {
            ModelSpec::SharedCompare(c) => {
                Model::SharedCompare(SharedCompareNet::new(c.clone(), seed)?)
            }
            ModelSpec::Stacked(c) => Model::Stacked(StackedNet::new(c.clone(), seed)?),
        })
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            Model::SharedCompare(m) => ModelSpec::SharedCompare(m.config().clone()),
            Model::Stacked(m) => ModelSpec::Stacked(m.config().clone()),
        }
    }

    pub fn params(&self) -> &ParamStore {
        match self {
            Model::SharedCompare(m) => m.params(),
            Model::Stacked(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        match self {
            Model::SharedCompare(m) => m.params_mut(),
            Model::Stacked(m) => m.params_mut(),
        }
    }
}
