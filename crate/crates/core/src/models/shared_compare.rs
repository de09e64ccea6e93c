//! Shared-compare network: one shared conv stack per agent, a compare stack
//! per (key, partner) pair, and a fully connected softmax head over the
//! concatenated pair features.

use std::hash::{DefaultHasher, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::SharedCompareConfig;
use super::ordering::{proximity_order, PersonOrdering};
use super::{ModelError, TrajectoryModel};
use crate::data::TrajectorySample;
use crate::nn::loss::weighted_cross_entropy_logit_grad;
use crate::nn::{
    softmax, weighted_cross_entropy, GradBuffer, LossWeights, ParamStore, Probe, Sequential, Trace,
};
use crate::tensor::SignalTensor;

#[derive(Debug, Clone)]
pub struct SharedCompareNet {
    config: SharedCompareConfig,
    shared: Sequential,
    compare: Sequential,
    head: Sequential,
    params: ParamStore,
}

struct Pass {
    probs: Vec<f64>,
    shared: Vec<Trace>,
    compare: Vec<Trace>,
    head: Trace,
}

impl Pass {
    fn signature(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for t in self
            .shared
            .iter()
            .chain(&self.compare)
            .chain(std::iter::once(&self.head))
        {
            t.write_signature(&mut h);
        }
        h.finish()
    }
}

impl SharedCompareNet {
    pub fn new(config: SharedCompareConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let shared = Sequential::build(
            &config.shared,
            (2, config.window),
            &mut params,
            &mut rng,
            "shared",
        )?;
        let (c, t) = shared.output_shape();
        let compare = Sequential::build(
            &config.compare_layers(),
            (2 * c, t),
            &mut params,
            &mut rng,
            "compare",
        )?;
        let head = Sequential::build(
            &config.head_layers(),
            (config.head_input_size()?, 1),
            &mut params,
            &mut rng,
            "head",
        )?;
        Ok(Self {
            config,
            shared,
            compare,
            head,
            params,
        })
    }

    pub fn config(&self) -> &SharedCompareConfig {
        &self.config
    }

    fn check_shape(&self, sample: &TrajectorySample) -> Result<(), ModelError> {
        let np = self.config.group_size;
        let t = self.config.window;
        if sample.persons.len() != np || sample.persons.iter().any(|p| p.len() != t) {
            return Err(ModelError::InputShape {
                expected: (np, t),
                actual: (sample.persons.len(), sample.window()),
            });
        }
        Ok(())
    }

    fn run(
        &self,
        params: &ParamStore,
        sample: &TrajectorySample,
        ordering: &PersonOrdering,
    ) -> Result<Pass, ModelError> {
        self.check_shape(sample)?;
        if ordering.len() != self.config.group_size {
            return Err(ModelError::InvalidOrdering(ordering.as_slice().to_vec()));
        }
        // shared outputs indexed by position in the ordering
        let mut shared_out = Vec::with_capacity(ordering.len());
        let mut shared_tr = Vec::with_capacity(ordering.len());
        for &p in ordering.as_slice() {
            let x = sample.persons[p].to_tensor(&self.config.bounds);
            let (y, tr) = self.shared.forward(params, &x)?;
            shared_out.push(y);
            shared_tr.push(tr);
        }
        let key_out = &shared_out[0];
        let start = usize::from(!self.config.include_self_pair);
        let mut features = Vec::with_capacity(self.head.input_shape().0);
        let mut compare_tr = Vec::new();
        for partner in &shared_out[start..] {
            let pair = SignalTensor::stack_channels(&[key_out, partner])?;
            let (z, tr) = self.compare.forward(params, &pair)?;
            features.extend_from_slice(z.values());
            compare_tr.push(tr);
        }
        let n = features.len();
        let (logits, head_tr) = self
            .head
            .forward(params, &SignalTensor::from_vec(n, 1, features)?)?;
        Ok(Pass {
            probs: softmax(logits.values()),
            shared: shared_tr,
            compare: compare_tr,
            head: head_tr,
        })
    }

    /// Class distribution with a given agent ordering (key first).
    pub fn forward(
        &self,
        sample: &TrajectorySample,
        ordering: &PersonOrdering,
    ) -> Result<Vec<f64>, ModelError> {
        Ok(self.run(&self.params, sample, ordering)?.probs)
    }

    /// Class distribution with the sample's annotated key agent.
    pub fn predict_known_key(&self, sample: &TrajectorySample) -> Result<Vec<f64>, ModelError> {
        let key = sample.key.ok_or(ModelError::MissingKey)?;
        self.forward(sample, &proximity_order(sample, key)?)
    }

    /// Mean of the distributions obtained by taking each present agent in turn
    /// as the key. The per-key distributions are summed in sorted order so
    /// the result does not depend on agent storage order, bit for bit.
    pub fn predict_unknown_key(&self, sample: &TrajectorySample) -> Result<Vec<f64>, ModelError> {
        self.check_shape(sample)?;
        let mut per_key = Vec::with_capacity(sample.persons.len());
        for (p, person) in sample.persons.iter().enumerate() {
            if person.is_present() {
                per_key.push(self.forward(sample, &proximity_order(sample, p)?)?);
            }
        }
        if per_key.is_empty() {
            return Err(ModelError::NoPresentPersons);
        }
        per_key.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let n = per_key.len() as f64;
        let mut sum = vec![0.0; self.config.num_classes];
        for probs in &per_key {
            for (s, v) in sum.iter_mut().zip(probs) {
                *s += v;
            }
        }
        Ok(sum.into_iter().map(|s| s / n).collect())
    }

    fn backprop(
        &self,
        params: &ParamStore,
        sample: &TrajectorySample,
        ordering: &PersonOrdering,
        weights: &LossWeights,
        grads: &mut GradBuffer,
    ) -> Result<f64, ModelError> {
        let pass = self.run(params, sample, ordering)?;
        let loss = weighted_cross_entropy(&pass.probs, sample.label, weights)?;
        let dlogits = weighted_cross_entropy_logit_grad(&pass.probs, sample.label, weights)?;
        let classes = dlogits.len();
        let dfeat = self.head.backward(
            params,
            &pass.head,
            &SignalTensor::from_vec(classes, 1, dlogits)?,
            grads,
        )?;

        let (c, t) = self.shared.output_shape();
        let mut dshared = vec![vec![0.0; c * t]; ordering.len()];
        let fsize = self.compare.output_shape().0;
        let start = usize::from(!self.config.include_self_pair);
        for (n, tr) in pass.compare.iter().enumerate() {
            let dz = SignalTensor::from_vec(
                fsize,
                1,
                dfeat.values()[n * fsize..(n + 1) * fsize].to_vec(),
            )?;
            let dpair = self.compare.backward(params, tr, &dz, grads)?;
            let (key_half, partner_half) = dpair.values().split_at(c * t);
            for (d, g) in dshared[0].iter_mut().zip(key_half) {
                *d += g;
            }
            for (d, g) in dshared[start + n].iter_mut().zip(partner_half) {
                *d += g;
            }
        }
        for (tr, d) in pass.shared.iter().zip(dshared) {
            self.shared
                .backward(params, tr, &SignalTensor::from_vec(c, t, d)?, grads)?;
        }
        Ok(loss)
    }
}

impl TrajectoryModel for SharedCompareNet {
    type Sample = TrajectorySample;

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn label(&self, sample: &TrajectorySample) -> usize {
        sample.label
    }

    fn predict(&self, sample: &TrajectorySample) -> Result<Vec<f64>, ModelError> {
        self.predict_known_key(sample)
    }

    fn loss_and_grad(
        &self,
        sample: &TrajectorySample,
        weights: &LossWeights,
        grads: &mut GradBuffer,
    ) -> Result<f64, ModelError> {
        let key = sample.key.ok_or(ModelError::MissingKey)?;
        let ordering = proximity_order(sample, key)?;
        self.backprop(&self.params, sample, &ordering, weights, grads)
    }

    fn probe(
        &self,
        params: &ParamStore,
        sample: &TrajectorySample,
        weights: &LossWeights,
    ) -> Result<Probe, ModelError> {
        let key = sample.key.ok_or(ModelError::MissingKey)?;
        let pass = self.run(params, sample, &proximity_order(sample, key)?)?;
        Ok(Probe {
            loss: weighted_cross_entropy(&pass.probs, sample.label, weights)?,
            signature: pass.signature(),
        })
    }
}
