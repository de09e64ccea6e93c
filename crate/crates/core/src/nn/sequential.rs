//! Layer stacks over the fixed vocabulary: conv1d, relu, maxpool, flatten and
//! fully connected.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernels;
use super::params::{GradBuffer, ParamId, ParamStore};
use super::NnError;
use crate::tensor::SignalTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        width: usize,
        #[serde(default)]
        bias: bool,
    },
    Relu,
    /// Window and stride are both `size`.
    Maxpool {
        size: usize,
    },
    Flatten,
    FullyConnected {
        outputs: usize,
        #[serde(default)]
        bias: bool,
    },
}

impl LayerSpec {
    pub fn conv(filters: usize, width: usize) -> Self {
        Self::Conv1d {
            filters,
            width,
            bias: false,
        }
    }

    pub fn pool(size: usize) -> Self {
        Self::Maxpool { size }
    }

    pub fn fc(outputs: usize) -> Self {
        Self::FullyConnected {
            outputs,
            bias: false,
        }
    }

    /// Output shape for a given input shape, or a type error.
    pub fn output_shape(&self, (c, t): (usize, usize)) -> Result<(usize, usize), NnError> {
        match *self {
            LayerSpec::Conv1d { filters, width, .. } => {
                if filters == 0 || width == 0 {
                    return Err(NnError::InvalidSpec(format!(
                        "conv1d needs filters >= 1 and width >= 1, got {filters} x {width}"
                    )));
                }
                Ok((filters, t))
            }
            LayerSpec::Relu => Ok((c, t)),
            LayerSpec::Maxpool { size } => {
                if size == 0 {
                    return Err(NnError::InvalidSpec(
                        "pool window must be at least 1".into(),
                    ));
                }
                Ok((c, kernels::pooled_len(t, size)))
            }
            LayerSpec::Flatten => Ok((c * t, 1)),
            LayerSpec::FullyConnected { outputs, .. } => {
                if outputs == 0 {
                    return Err(NnError::InvalidSpec(
                        "fully connected needs outputs >= 1".into(),
                    ));
                }
                if t != 1 {
                    return Err(NnError::InvalidSpec(format!(
                        "fully connected layer needs a flattened input, got length {t}"
                    )));
                }
                Ok((outputs, 1))
            }
        }
    }

    /// Trainable scalars this layer adds for the given input shape.
    pub fn param_count(&self, (c, t): (usize, usize)) -> usize {
        match *self {
            LayerSpec::Conv1d {
                filters,
                width,
                bias,
            } => c * width * filters + if bias { filters } else { 0 },
            LayerSpec::FullyConnected { outputs, bias } => {
                c * t * outputs + if bias { outputs } else { 0 }
            }
            _ => 0,
        }
    }
}

/// Shape-checks a layer list and returns the final shape.
pub fn infer_shape(specs: &[LayerSpec], input: (usize, usize)) -> Result<(usize, usize), NnError> {
    specs.iter().try_fold(input, |s, l| l.output_shape(s))
}

/// Exact trainable scalar count for a layer list.
pub fn count_params(specs: &[LayerSpec], input: (usize, usize)) -> Result<usize, NnError> {
    let mut shape = input;
    let mut n = 0;
    for l in specs {
        n += l.param_count(shape);
        shape = l.output_shape(shape)?;
    }
    Ok(n)
}

#[derive(Debug, Clone)]
enum Layer {
    Conv {
        weights: ParamId,
        bias: Option<ParamId>,
        width: usize,
        filters: usize,
    },
    Relu,
    Pool {
        size: usize,
    },
    Flatten,
    Dense {
        weights: ParamId,
        bias: Option<ParamId>,
        outputs: usize,
    },
}

#[derive(Debug, Clone)]
enum Cache {
    /// Time-major input.
    Conv(Vec<f64>),
    Relu(Vec<bool>),
    Pool(Vec<usize>),
    Flatten,
    Dense(Vec<f64>),
}

/// Per-call forward state needed by [`Sequential::backward`].
#[derive(Debug, Clone)]
pub struct Trace {
    caches: Vec<Cache>,
    shapes: Vec<(usize, usize)>,
}

impl Trace {
    /// Hash of every ReLU gate and pooling winner. Two traces with the same
    /// signature took the same piecewise-linear branch.
    pub fn signature(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.write_signature(&mut h);
        h.finish()
    }

    pub(crate) fn write_signature<H: Hasher>(&self, h: &mut H) {
        for c in &self.caches {
            match c {
                Cache::Relu(m) => m.hash(h),
                Cache::Pool(a) => a.hash(h),
                _ => {}
            }
        }
    }
}

/// A type-checked stack of layers whose weights live in a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Sequential {
    specs: Vec<LayerSpec>,
    layers: Vec<Layer>,
    input_shape: (usize, usize),
    output_shape: (usize, usize),
}

impl Sequential {
    /// Allocates and initialises the stack's parameters in `params`, naming
    /// them `{prefix}.{layer index}.w` / `.b`.
    pub fn build<R: Rng>(
        specs: &[LayerSpec],
        input_shape: (usize, usize),
        params: &mut ParamStore,
        rng: &mut R,
        prefix: &str,
    ) -> Result<Self, NnError> {
        if input_shape.0 == 0 {
            return Err(NnError::InvalidSpec(
                "input needs at least one channel".into(),
            ));
        }
        let mut shape = input_shape;
        let mut layers = Vec::with_capacity(specs.len());
        for (n, spec) in specs.iter().enumerate() {
            let next = spec.output_shape(shape)?;
            let layer = match *spec {
                LayerSpec::Conv1d {
                    filters,
                    width,
                    bias,
                } => {
                    let c = shape.0;
                    let weights = params.add_glorot(
                        format!("{prefix}.{n}.w"),
                        c * width * filters,
                        c * width,
                        filters * width,
                        rng,
                    );
                    let bias =
                        bias.then(|| params.add(format!("{prefix}.{n}.b"), vec![0.0; filters]));
                    Layer::Conv {
                        weights,
                        bias,
                        width,
                        filters,
                    }
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Maxpool { size } => Layer::Pool { size },
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::FullyConnected { outputs, bias } => {
                    let inputs = shape.0 * shape.1;
                    let weights = params.add_glorot(
                        format!("{prefix}.{n}.w"),
                        inputs * outputs,
                        inputs,
                        outputs,
                        rng,
                    );
                    let bias =
                        bias.then(|| params.add(format!("{prefix}.{n}.b"), vec![0.0; outputs]));
                    Layer::Dense {
                        weights,
                        bias,
                        outputs,
                    }
                }
            };
            layers.push(layer);
            shape = next;
        }
        Ok(Self {
            specs: specs.to_vec(),
            layers,
            input_shape,
            output_shape: shape,
        })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    pub fn output_shape(&self) -> (usize, usize) {
        self.output_shape
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv { weights, bias, .. } | Layer::Dense { weights, bias, .. } => {
                    ids.push(*weights);
                    ids.extend(bias);
                }
                _ => {}
            }
        }
        ids
    }

    pub fn forward(
        &self,
        params: &ParamStore,
        x: &SignalTensor,
    ) -> Result<(SignalTensor, Trace), NnError> {
        if x.shape() != self.input_shape {
            return Err(NnError::InputShape {
                expected: self.input_shape,
                actual: x.shape(),
            });
        }
        let (mut c, mut t) = x.shape();
        let mut act = x.to_time_major();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut shapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shapes.push((c, t));
            match layer {
                Layer::Conv {
                    weights,
                    bias,
                    width,
                    filters,
                } => {
                    let out = kernels::conv_forward(
                        &act,
                        c,
                        t,
                        params.value(*weights),
                        *width,
                        *filters,
                        bias.map(|b| params.value(b)),
                    );
                    caches.push(Cache::Conv(std::mem::replace(&mut act, out)));
                    c = *filters;
                }
                Layer::Relu => {
                    let (out, mask) = kernels::relu_forward(&act);
                    act = out;
                    caches.push(Cache::Relu(mask));
                }
                Layer::Pool { size } => {
                    let (out, arg) = kernels::maxpool_forward(&act, c, t, *size);
                    act = out;
                    t = kernels::pooled_len(t, *size);
                    caches.push(Cache::Pool(arg));
                }
                Layer::Flatten => {
                    act = SignalTensor::from_time_major(c, t, &act).into_values();
                    c *= t;
                    t = 1;
                    caches.push(Cache::Flatten);
                }
                Layer::Dense {
                    weights,
                    bias,
                    outputs,
                } => {
                    let out = kernels::dense_forward(
                        &act,
                        params.value(*weights),
                        *outputs,
                        bias.map(|b| params.value(b)),
                    );
                    caches.push(Cache::Dense(std::mem::replace(&mut act, out)));
                    c = *outputs;
                }
            }
        }
        Ok((
            SignalTensor::from_time_major(c, t, &act),
            Trace { caches, shapes },
        ))
    }

    /// Convenience forward that drops the trace.
    pub fn infer(&self, params: &ParamStore, x: &SignalTensor) -> Result<SignalTensor, NnError> {
        self.forward(params, x).map(|(y, _)| y)
    }

    /// Whether layer `n`'s input is the output of a ReLU, directly or through
    /// max pooling.
    fn relu_gated(&self, n: usize) -> bool {
        let mut k = n;
        while k > 0 {
            k -= 1;
            match self.layers[k] {
                Layer::Relu => return true,
                Layer::Pool { .. } => continue,
                _ => return false,
            }
        }
        false
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input.
    pub fn backward(
        &self,
        params: &ParamStore,
        trace: &Trace,
        grad_out: &SignalTensor,
        grads: &mut GradBuffer,
    ) -> Result<SignalTensor, NnError> {
        if trace.caches.len() != self.layers.len() {
            return Err(NnError::TraceMismatch);
        }
        if grad_out.shape() != self.output_shape {
            return Err(NnError::InputShape {
                expected: self.output_shape,
                actual: grad_out.shape(),
            });
        }
        let mut g = grad_out.to_time_major();
        for (n, ((layer, cache), &(c, t))) in self
            .layers
            .iter()
            .zip(&trace.caches)
            .zip(&trace.shapes)
            .enumerate()
            .rev()
        {
            g = match (layer, cache) {
                (
                    Layer::Conv {
                        weights,
                        bias,
                        width,
                        filters,
                    },
                    Cache::Conv(x),
                ) => {
                    let mut db = bias.map(|b| grads.get(b).to_vec());
                    let dx = kernels::conv_backward(
                        x,
                        c,
                        t,
                        params.value(*weights),
                        *width,
                        *filters,
                        &g,
                        grads.get_mut(*weights),
                        db.as_deref_mut(),
                        self.relu_gated(n),
                    );
                    if let (Some(b), Some(db)) = (bias, db) {
                        grads.get_mut(*b).copy_from_slice(&db);
                    }
                    dx
                }
                (Layer::Relu, Cache::Relu(mask)) => kernels::relu_backward(&g, mask),
                (Layer::Pool { .. }, Cache::Pool(arg)) => kernels::maxpool_backward(&g, arg, c, t),
                (Layer::Flatten, Cache::Flatten) => {
                    // channel-major flat gradient back to time-major (c, t)
                    SignalTensor::from_parts(c, t, g).to_time_major()
                }
                (
                    Layer::Dense {
                        weights,
                        bias,
                        outputs,
                    },
                    Cache::Dense(x),
                ) => {
                    let mut db = bias.map(|b| grads.get(b).to_vec());
                    let dx = kernels::dense_backward(
                        x,
                        params.value(*weights),
                        *outputs,
                        &g,
                        grads.get_mut(*weights),
                        db.as_deref_mut(),
                    );
                    if let (Some(b), Some(db)) = (bias, db) {
                        grads.get_mut(*b).copy_from_slice(&db);
                    }
                    dx
                }
                _ => return Err(NnError::TraceMismatch),
            };
        }
        let (c, t) = self.input_shape;
        Ok(SignalTensor::from_time_major(c, t, &g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_chain_and_counts() {
        let specs = [
            LayerSpec::conv(64, 3),
            LayerSpec::Relu,
            LayerSpec::conv(128, 3),
            LayerSpec::Relu,
            LayerSpec::pool(2),
        ];
        assert_eq!(infer_shape(&specs, (2, 16)).unwrap(), (128, 8));
        assert_eq!(count_params(&specs[..1], (2, 16)).unwrap(), 384);
        assert_eq!(count_params(&[LayerSpec::conv(1, 1)], (1, 5)).unwrap(), 1);
        assert_eq!(
            count_params(&[LayerSpec::conv(2, 1)], (1, 5)).unwrap(),
            2 * count_params(&[LayerSpec::conv(1, 1)], (1, 5)).unwrap()
        );
        assert!(infer_shape(&[LayerSpec::fc(3)], (2, 4)).is_err());
        assert!(infer_shape(&[LayerSpec::conv(0, 3)], (2, 4)).is_err());
        assert!(infer_shape(&[LayerSpec::pool(0)], (2, 4)).is_err());
    }

    #[test]
    fn rejects_wrong_input_shape() {
        let mut ps = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq =
            Sequential::build(&[LayerSpec::conv(2, 3)], (2, 8), &mut ps, &mut rng, "s").unwrap();
        let x = SignalTensor::zeros(3, 8).unwrap();
        assert!(matches!(
            seq.forward(&ps, &x),
            Err(NnError::InputShape { .. })
        ));
    }

    #[test]
    fn zero_input_gives_zero_conv_grads() {
        let mut ps = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let specs = [
            LayerSpec::conv(4, 3),
            LayerSpec::Relu,
            LayerSpec::conv(4, 2),
            LayerSpec::Relu,
            LayerSpec::pool(2),
        ];
        let seq = Sequential::build(&specs, (2, 6), &mut ps, &mut rng, "s").unwrap();
        let x = SignalTensor::zeros(2, 6).unwrap();
        let (_, trace) = seq.forward(&ps, &x).unwrap();
        let g = SignalTensor::from_vec(4, 3, (0..12).map(|v| v as f64 - 5.0).collect()).unwrap();
        let mut grads = GradBuffer::zeros_like(&ps);
        seq.backward(&ps, &trace, &g, &mut grads).unwrap();
        assert!(grads.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn single_linear_layer_gradient_is_input_times_residual() {
        // y = W^T x, loss = 0.5 |y - target|^2  =>  dW[i][o] = x[i] * (y - target)[o]
        let mut ps = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seq = Sequential::build(&[LayerSpec::fc(2)], (3, 1), &mut ps, &mut rng, "l").unwrap();
        let x = SignalTensor::from_vec(3, 1, vec![0.5, -1.0, 2.0]).unwrap();
        let (y, trace) = seq.forward(&ps, &x).unwrap();
        let target = [1.0, -1.0];
        let resid: Vec<f64> = y.values().iter().zip(target).map(|(a, b)| a - b).collect();
        let mut grads = GradBuffer::zeros_like(&ps);
        seq.backward(
            &ps,
            &trace,
            &SignalTensor::from_vec(2, 1, resid.clone()).unwrap(),
            &mut grads,
        )
        .unwrap();
        let dw = grads.get(ParamId(0));
        for i in 0..3 {
            for o in 0..2 {
                assert!((dw[i * 2 + o] - x.values()[i] * resid[o]).abs() < 1e-15);
            }
        }
    }
}
