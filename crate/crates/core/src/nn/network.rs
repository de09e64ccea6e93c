use std::hash::{DefaultHasher, Hasher};

use rand::Rng;

use super::gradcheck::{check_params, GradCheckConfig, GradCheckReport, Probe};
use super::loss::{weighted_cross_entropy, weighted_cross_entropy_logit_grad, LossWeights};
use super::params::{GradBuffer, ParamStore};
use super::sequential::{LayerSpec, Sequential, Trace};
use super::NnError;
use crate::tensor::SignalTensor;

/// A single layer stack ending in logits, with softmax on top and a cached
/// forward pass for [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Network {
    stack: Sequential,
    params: ParamStore,
    cache: Option<(Trace, Vec<f64>)>,
}

impl Network {
    pub fn new<R: Rng>(
        specs: &[LayerSpec],
        input_shape: (usize, usize),
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut params = ParamStore::new();
        let stack = Sequential::build(specs, input_shape, &mut params, rng, "net")?;
        if stack.output_shape().1 != 1 {
            return Err(NnError::InvalidSpec(
                "network must end in a flattened logit vector".into(),
            ));
        }
        Ok(Self {
            stack,
            params,
            cache: None,
        })
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn stack(&self) -> &Sequential {
        &self.stack
    }

    /// Class probabilities; caches the pass for a following backward.
    pub fn forward(&mut self, x: &SignalTensor) -> Result<Vec<f64>, NnError> {
        let (logits, trace) = self.stack.forward(&self.params, x)?;
        let probs = super::ops::softmax(logits.values());
        self.cache = Some((trace, probs.clone()));
        Ok(probs)
    }

    /// Accumulates the gradient of the weighted cross-entropy of the cached
    /// forward pass into the parameter store. Returns the loss.
    pub fn backward(&mut self, label: usize, weights: &LossWeights) -> Result<f64, NnError> {
        let (trace, probs) = self.cache.take().ok_or(NnError::BackwardBeforeForward)?;
        let loss = weighted_cross_entropy(&probs, label, weights)?;
        let dlogits = weighted_cross_entropy_logit_grad(&probs, label, weights)?;
        let g = SignalTensor::from_parts(dlogits.len(), 1, dlogits);
        let mut grads = GradBuffer::zeros_like(&self.params);
        self.stack.backward(&self.params, &trace, &g, &mut grads)?;
        self.params.grads_mut().accumulate(&grads);
        Ok(loss)
    }

    pub fn loss(
        &self,
        x: &SignalTensor,
        label: usize,
        weights: &LossWeights,
    ) -> Result<Probe, NnError> {
        probe(&self.stack, &self.params, x, label, weights)
    }

    /// Finite-difference check of every parameter for one sample.
    pub fn gradient_check(
        &mut self,
        x: &SignalTensor,
        label: usize,
        weights: &LossWeights,
        cfg: &GradCheckConfig,
    ) -> Result<GradCheckReport, NnError> {
        self.params.zero_grad();
        self.forward(x)?;
        self.backward(label, weights)?;
        let analytic = self.params.grads().clone();
        let stack = self.stack.clone();
        // evaluate once up front so errors surface before the probe loop
        probe(&stack, &self.params, x, label, weights)?;
        Ok(check_params(&mut self.params, &analytic, cfg, |ps| {
            probe(&stack, ps, x, label, weights).expect("shape already validated")
        }))
    }
}

fn probe(
    stack: &Sequential,
    params: &ParamStore,
    x: &SignalTensor,
    label: usize,
    weights: &LossWeights,
) -> Result<Probe, NnError> {
    let (logits, trace) = stack.forward(params, x)?;
    let probs = super::ops::softmax(logits.values());
    let mut h = DefaultHasher::new();
    trace.write_signature(&mut h);
    Ok(Probe {
        loss: weighted_cross_entropy(&probs, label, weights)?,
        signature: h.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_requires_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net =
            Network::new(&[LayerSpec::Flatten, LayerSpec::fc(3)], (2, 4), &mut rng).unwrap();
        assert!(matches!(
            net.backward(0, &LossWeights::uniform(3)),
            Err(NnError::BackwardBeforeForward)
        ));
        let x = SignalTensor::zeros(2, 4).unwrap();
        net.forward(&x).unwrap();
        net.backward(0, &LossWeights::uniform(3)).unwrap();
        // the cache is consumed
        assert!(net.backward(0, &LossWeights::uniform(3)).is_err());
    }
}
