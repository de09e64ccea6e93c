use rand::Rng;
use serde::{Deserialize, Serialize};

/// Index of a parameter array inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub values: Vec<f64>,
}

/// Gradient arrays congruent with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradBuffer {
    bufs: Vec<Vec<f64>>,
}

impl GradBuffer {
    pub fn zeros_like(params: &ParamStore) -> Self {
        Self {
            bufs: params
                .params
                .iter()
                .map(|p| vec![0.0; p.values.len()])
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.bufs[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.bufs[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.bufs.iter().map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.bufs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bufs.is_empty()
    }

    pub fn zero(&mut self) {
        for b in &mut self.bufs {
            b.fill(0.0);
        }
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &GradBuffer) {
        for (a, b) in self.bufs.iter_mut().zip(&other.bufs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.bufs {
            for x in b.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.bufs.iter().flatten().all(|v| v.is_finite())
    }
}

/// Named weight arrays with matching gradient arrays, iterated in insertion
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
    grads: GradBuffer,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self {
            params: Vec::new(),
            grads: GradBuffer { bufs: Vec::new() },
        }
    }

    pub fn add(&mut self, name: impl Into<String>, values: Vec<f64>) -> ParamId {
        self.grads.bufs.push(vec![0.0; values.len()]);
        self.params.push(Param {
            name: name.into(),
            values,
        });
        ParamId(self.params.len() - 1)
    }

    /// Adds an array initialised uniformly in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn add_glorot<R: Rng>(
        &mut self,
        name: impl Into<String>,
        len: usize,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> ParamId {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let values = (0..len).map(|_| rng.random_range(-limit..=limit)).collect();
        self.add(name, values)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].values
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Vec<f64> {
        &mut self.params[id.0].values
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn grads(&self) -> &GradBuffer {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut GradBuffer {
        &mut self.grads
    }

    pub fn zero_grad(&mut self) {
        self.grads.zero();
    }

    /// Total number of trainable scalars.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params
            .iter()
            .flat_map(|p| &p.values)
            .all(|v| v.is_finite())
    }

    /// Replaces every array's values, keeping names; lengths must match.
    pub fn load_values(&mut self, arrays: Vec<Vec<f64>>) -> Result<(), String> {
        if arrays.len() != self.params.len() {
            return Err(format!(
                "expected {} parameter arrays, found {}",
                self.params.len(),
                arrays.len()
            ));
        }
        for (p, a) in self.params.iter().zip(&arrays) {
            if p.values.len() != a.len() {
                return Err(format!(
                    "parameter {} expects {} values, found {}",
                    p.name,
                    p.values.len(),
                    a.len()
                ));
            }
        }
        for (p, a) in self.params.iter_mut().zip(arrays) {
            p.values = a;
        }
        Ok(())
    }
}
