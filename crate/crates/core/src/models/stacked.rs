//! Stacked network: ball and player `(x, y)` series stacked as channels and
//! fed through a single conv stack with a softmax head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::StackedConfig;
use super::ordering::ball_order;
use super::{ModelError, TrajectoryModel};
use crate::data::PossessionSample;
use crate::nn::loss::weighted_cross_entropy_logit_grad;
use crate::nn::{
    softmax, weighted_cross_entropy, GradBuffer, LossWeights, ParamStore, Probe, Sequential,
};
use crate::tensor::SignalTensor;

#[derive(Debug, Clone)]
pub struct StackedNet {
    config: StackedConfig,
    stack: Sequential,
    params: ParamStore,
}

impl StackedNet {
    pub fn new(config: StackedConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let stack = Sequential::build(
            &config.all_layers(),
            config.input_shape(),
            &mut params,
            &mut rng,
            "stacked",
        )?;
        Ok(Self {
            config,
            stack,
            params,
        })
    }

    pub fn config(&self) -> &StackedConfig {
        &self.config
    }

    /// The network input: ball first (if configured), then players by
    /// ascending mean distance to the ball.
    pub fn input_tensor(&self, sample: &PossessionSample) -> Result<SignalTensor, ModelError> {
        let np = self.config.players;
        let t = self.config.window;
        if sample.players.len() != np
            || sample.ball.len() != t
            || sample.players.iter().any(|p| p.len() != t)
        {
            return Err(ModelError::InputShape {
                expected: (np, t),
                actual: (sample.players.len(), sample.window()),
            });
        }
        let order = ball_order(sample)?;
        let b = &self.config.bounds;
        let mut parts = Vec::with_capacity(np + 1);
        if self.config.includes_ball {
            parts.push(sample.ball.to_tensor(b));
        }
        parts.extend(order.iter().map(|&p| sample.players[p].to_tensor(b)));
        let refs: Vec<&SignalTensor> = parts.iter().collect();
        Ok(SignalTensor::stack_channels(&refs)?)
    }

    /// Runs the stack on an already-assembled input tensor. Rejects any shape
    /// other than the configured `channels x window`.
    pub fn forward_tensor(&self, x: &SignalTensor) -> Result<Vec<f64>, ModelError> {
        let expected = self.config.input_shape();
        if x.shape() != expected {
            return Err(ModelError::InputShape {
                expected,
                actual: x.shape(),
            });
        }
        let logits = self.stack.infer(&self.params, x)?;
        Ok(softmax(logits.values()))
    }

    pub fn forward(&self, sample: &PossessionSample) -> Result<Vec<f64>, ModelError> {
        self.forward_tensor(&self.input_tensor(sample)?)
    }
}

impl TrajectoryModel for StackedNet {
    type Sample = PossessionSample;

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn label(&self, sample: &PossessionSample) -> usize {
        sample.team
    }

    fn predict(&self, sample: &PossessionSample) -> Result<Vec<f64>, ModelError> {
        self.forward(sample)
    }

    fn loss_and_grad(
        &self,
        sample: &PossessionSample,
        weights: &LossWeights,
        grads: &mut GradBuffer,
    ) -> Result<f64, ModelError> {
        let x = self.input_tensor(sample)?;
        let (logits, trace) = self.stack.forward(&self.params, &x)?;
        let probs = softmax(logits.values());
        let loss = weighted_cross_entropy(&probs, sample.team, weights)?;
        let d = weighted_cross_entropy_logit_grad(&probs, sample.team, weights)?;
        let n = d.len();
        self.stack.backward(
            &self.params,
            &trace,
            &SignalTensor::from_vec(n, 1, d)?,
            grads,
        )?;
        Ok(loss)
    }

    fn probe(
        &self,
        params: &ParamStore,
        sample: &PossessionSample,
        weights: &LossWeights,
    ) -> Result<Probe, ModelError> {
        let x = self.input_tensor(sample)?;
        let (logits, trace) = self.stack.forward(params, &x)?;
        let probs = softmax(logits.values());
        Ok(Probe {
            loss: weighted_cross_entropy(&probs, sample.team, weights)?,
            signature: trace.signature(),
        })
    }
}
