use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::NnError;

/// SGD with heavy-ball momentum: `v <- momentum * v + grad`, `w <- w - lr * v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    lr: f64,
    momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Result<Self, NnError> {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(NnError::InvalidLearningRate(lr));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(NnError::InvalidMomentum(momentum));
        }
        Ok(Self {
            lr,
            momentum,
            velocity: Vec::new(),
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn step(&mut self, params: &mut ParamStore) {
        if self.velocity.len() != params.len() {
            self.velocity = params
                .params()
                .iter()
                .map(|p| vec![0.0; p.values.len()])
                .collect();
        }
        for id in params.ids().collect::<Vec<_>>() {
            let v = &mut self.velocity[id.0];
            let g = params.grads().get(id).to_vec();
            let w = params.value_mut(id);
            for ((wv, vv), gv) in w.iter_mut().zip(v.iter_mut()).zip(&g) {
                *vv = self.momentum * *vv + gv;
                *wv -= self.lr * *vv;
            }
        }
    }
}

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    steps: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(lr: f64) -> Result<Self, NnError> {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(NnError::InvalidLearningRate(lr));
        }
        Ok(Self {
            lr,
            steps: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn step(&mut self, params: &mut ParamStore) {
        if self.m.len() != params.len() {
            self.m = params
                .params()
                .iter()
                .map(|p| vec![0.0; p.values.len()])
                .collect();
            self.v = self.m.clone();
        }
        self.steps = self.steps.saturating_add(1);
        let c1 = 1.0 - Self::BETA1.powi(self.steps);
        let c2 = 1.0 - Self::BETA2.powi(self.steps);
        for id in params.ids().collect::<Vec<_>>() {
            let (m, v) = (&mut self.m[id.0], &mut self.v[id.0]);
            let g = params.grads().get(id).to_vec();
            let w = params.value_mut(id);
            for (((wv, mv), vv), gv) in w.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(&g) {
                *mv = Self::BETA1 * *mv + (1.0 - Self::BETA1) * gv;
                *vv = Self::BETA2 * *vv + (1.0 - Self::BETA2) * gv * gv;
                *wv -= self.lr * (*mv / c1) / ((*vv / c2).sqrt() + Self::EPS);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd(Sgd),
    Adam(Adam),
}

impl Optimizer {
    /// `momentum` applies to SGD only.
    pub fn new(kind: OptimizerKind, lr: f64, momentum: f64) -> Result<Self, NnError> {
        Ok(match kind {
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd::new(lr, momentum)?),
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr)?),
        })
    }

    pub fn step(&mut self, params: &mut ParamStore) {
        match self {
            Optimizer::Sgd(o) => o.step(params),
            Optimizer::Adam(o) => o.step(params),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(matches!(
            Sgd::new(0.0, 0.9),
            Err(NnError::InvalidLearningRate(_))
        ));
        assert!(matches!(
            Sgd::new(-1.0, 0.9),
            Err(NnError::InvalidLearningRate(_))
        ));
        assert!(matches!(
            Sgd::new(0.1, 1.0),
            Err(NnError::InvalidMomentum(_))
        ));
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut ps = ParamStore::new();
        ps.add("w", vec![1.0, -2.0]);
        let before = ps.clone();
        let mut opt = Sgd::new(0.5, 0.9).unwrap();
        opt.step(&mut ps);
        assert_eq!(ps, before);
    }

    #[test]
    fn plain_step_subtracts_gradient() {
        let mut ps = ParamStore::new();
        let id = ps.add("w", vec![1.0, -2.0]);
        ps.grads_mut().get_mut(id).copy_from_slice(&[0.25, -0.5]);
        let mut opt = Sgd::new(1.0, 0.0).unwrap();
        opt.step(&mut ps);
        assert_eq!(ps.value(id), &[0.75, -1.5]);
    }

    #[test]
    fn quadratic_loss_decreases_monotonically() {
        // f(w) = 0.5 * sum a_i w_i^2
        let a = [1.0, 3.0, 0.5];
        let mut ps = ParamStore::new();
        let id = ps.add("w", vec![2.0, -1.0, 4.0]);
        let loss = |w: &[f64]| 0.5 * w.iter().zip(a).map(|(w, a)| a * w * w).sum::<f64>();
        let mut opt = Sgd::new(0.1, 0.0).unwrap();
        let mut prev = loss(ps.value(id));
        for _ in 0..200 {
            let g: Vec<f64> = ps.value(id).iter().zip(a).map(|(w, a)| a * w).collect();
            ps.grads_mut().get_mut(id).copy_from_slice(&g);
            opt.step(&mut ps);
            let l = loss(ps.value(id));
            assert!(l < prev, "loss rose from {prev} to {l}");
            prev = l;
        }
    }

    #[test]
    fn momentum_converges_on_quadratic() {
        let mut ps = ParamStore::new();
        let id = ps.add("w", vec![2.0, -1.0]);
        let mut opt = Sgd::new(0.01, 0.9).unwrap();
        for _ in 0..2000 {
            let g: Vec<f64> = ps.value(id).iter().map(|w| 2.0 * w).collect();
            ps.grads_mut().get_mut(id).copy_from_slice(&g);
            opt.step(&mut ps);
        }
        assert!(ps.value(id).iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // bias correction makes the first step lr * sign(g)
        let mut ps = ParamStore::new();
        let id = ps.add("w", vec![1.0, -2.0, 0.5]);
        ps.grads_mut()
            .get_mut(id)
            .copy_from_slice(&[0.25, -4.0, 0.0]);
        let mut opt = Adam::new(0.1).unwrap();
        opt.step(&mut ps);
        let w = ps.value(id);
        assert!((w[0] - 0.9).abs() < 1e-6 && (w[1] + 1.9).abs() < 1e-6);
        assert_eq!(w[2], 0.5);
    }

    #[test]
    fn adam_minimises_a_quadratic() {
        let mut ps = ParamStore::new();
        let id = ps.add("w", vec![3.0, -1.5]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.05, 0.0).unwrap();
        for _ in 0..2000 {
            let g: Vec<f64> = ps.value(id).iter().map(|w| 2.0 * w).collect();
            ps.grads_mut().get_mut(id).copy_from_slice(&g);
            opt.step(&mut ps);
        }
        assert!(
            ps.value(id).iter().all(|w| w.abs() < 1e-3),
            "{:?}",
            ps.value(id)
        );
    }
}
