//! Single-layer operations on [`SignalTensor`]s.

use super::kernels;
use super::NnError;
use crate::tensor::{FilterBank, SignalTensor};

/// Stride-1 convolution, right-padded with `width - 1` zero frames so the
/// output keeps the input length. No activation is applied.
pub fn conv1d_forward(
    x: &SignalTensor,
    filters: &FilterBank,
    bias: Option<&[f64]>,
) -> Result<SignalTensor, NnError> {
    if x.channels() != filters.in_channels() {
        return Err(NnError::ShapeMismatch {
            what: "conv1d input channels",
            expected: filters.in_channels(),
            actual: x.channels(),
        });
    }
    if let Some(b) = bias {
        if b.len() != filters.out_channels() {
            return Err(NnError::ShapeMismatch {
                what: "conv1d bias length",
                expected: filters.out_channels(),
                actual: b.len(),
            });
        }
    }
    let out = kernels::conv_forward(
        &x.to_time_major(),
        x.channels(),
        x.length(),
        filters.weights(),
        filters.width(),
        filters.out_channels(),
        bias,
    );
    Ok(SignalTensor::from_time_major(
        filters.out_channels(),
        x.length(),
        &out,
    ))
}

pub fn relu_forward(x: &SignalTensor) -> SignalTensor {
    let (out, _) = kernels::relu_forward(x.values());
    SignalTensor::from_parts(x.channels(), x.length(), out)
}

/// Winning input frame for every pooled cell, channel-major like the output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgmaxRecord {
    pub size: usize,
    pub input_length: usize,
    pub indices: Vec<usize>,
}

/// Non-overlapping max pooling with window and stride `size`; output length
/// is `ceil(T / size)`.
pub fn maxpool_forward(
    x: &SignalTensor,
    size: usize,
) -> Result<(SignalTensor, ArgmaxRecord), NnError> {
    if size == 0 {
        return Err(NnError::InvalidSpec(
            "pool window must be at least 1".into(),
        ));
    }
    let (c, t) = x.shape();
    let (out, arg) = kernels::maxpool_forward(&x.to_time_major(), c, t, size);
    let out_len = kernels::pooled_len(t, size);
    let pooled = SignalTensor::from_time_major(c, out_len, &out);
    let mut indices = vec![0; arg.len()];
    for p in 0..out_len {
        for ch in 0..c {
            indices[ch * out_len + p] = arg[p * c + ch];
        }
    }
    Ok((
        pooled,
        ArgmaxRecord {
            size,
            input_length: t,
            indices,
        },
    ))
}

/// Fully connected layer into softmax. `weights` is `features x classes`,
/// row-major by feature.
pub fn fc_softmax_forward(
    features: &[f64],
    weights: &[f64],
    classes: usize,
    bias: Option<&[f64]>,
) -> Result<Vec<f64>, NnError> {
    if classes == 0 || weights.len() != features.len() * classes {
        return Err(NnError::ShapeMismatch {
            what: "fully connected weights",
            expected: features.len() * classes,
            actual: weights.len(),
        });
    }
    let logits = kernels::dense_forward(features, weights, classes, bias);
    Ok(softmax(&logits))
}

/// Softmax with max-subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    kernels::softmax(logits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_conv(x: &SignalTensor, f: &FilterBank) -> Vec<f64> {
        let (n, t_len) = x.shape();
        let m = f.out_channels();
        let mut out = vec![0.0; m * t_len];
        for k in 0..m {
            for t in 0..t_len {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..f.width() {
                        let xv = if t + j < t_len { x.get(i, t + j) } else { 0.0 };
                        s += xv * f.get(i, j, k);
                    }
                }
                out[k * t_len + t] = s;
            }
        }
        out
    }

    fn t1(v: &[f64]) -> SignalTensor {
        SignalTensor::from_vec(1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn conv_difference_filter() {
        let x = t1(&[1.0, 2.0, 3.0, 4.0]);
        let f = FilterBank::new(1, 3, 1, vec![1.0, 0.0, -1.0]).unwrap();
        let o = conv1d_forward(&x, &f, None).unwrap();
        assert_eq!(o.values(), naive_conv(&x, &f).as_slice());
        assert_eq!(o.values(), &[-2.0, -2.0, 3.0, 4.0]);
    }

    #[test]
    fn conv_identity_and_zero() {
        let x = SignalTensor::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.25, -7.0]).unwrap();
        let id = FilterBank::from_fn(2, 1, 2, |i, _, k| if i == k { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(conv1d_forward(&x, &id, None).unwrap(), x);

        let z = SignalTensor::zeros(3, 5).unwrap();
        let f = FilterBank::from_fn(3, 2, 4, |i, j, k| (i + 2 * j + 3 * k) as f64 - 4.0).unwrap();
        assert_eq!(
            conv1d_forward(&z, &f, None).unwrap(),
            SignalTensor::zeros(4, 5).unwrap()
        );
    }

    #[test]
    fn conv_channel_mismatch() {
        let x = SignalTensor::zeros(2, 4).unwrap();
        let f = FilterBank::new(3, 1, 1, vec![1.0; 3]).unwrap();
        assert!(matches!(
            conv1d_forward(&x, &f, None),
            Err(NnError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn relu_examples() {
        assert_eq!(
            relu_forward(&t1(&[-2.0, -2.0, 3.0, 4.0])).values(),
            &[0.0, 0.0, 3.0, 4.0]
        );
        let pos = t1(&[0.0, 1.0, 2.5]);
        assert_eq!(relu_forward(&pos), pos);
        assert_eq!(relu_forward(&t1(&[-1.0, -0.5])).values(), &[0.0, 0.0]);
    }

    #[test]
    fn pool_examples() {
        let (p, rec) = maxpool_forward(&t1(&[0.0, 0.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(p.values(), &[0.0, 4.0]);
        assert_eq!(rec.indices, vec![0, 3]);

        for s in 1..5 {
            let (p, _) = maxpool_forward(&t1(&[2.5; 7]), s).unwrap();
            assert!(p.values().iter().all(|v| *v == 2.5));
        }

        let (p, rec) = maxpool_forward(&t1(&[1.0, 5.0, 2.0, 2.0, 9.0]), 2).unwrap();
        assert_eq!(p.length(), 3);
        assert_eq!(p.values(), &[5.0, 2.0, 9.0]);
        // tie in the middle window goes to the earlier frame
        assert_eq!(rec.indices, vec![1, 2, 4]);
    }

    #[test]
    fn softmax_examples() {
        let u = fc_softmax_forward(&[0.0], &[0.0; 6], 6, None).unwrap();
        for p in &u {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
        let big = softmax(&[1000.0, 0.0]);
        assert!((big[0] - 1.0).abs() < 1e-15 && big[1] < 1e-300);
        let two = softmax(&[std::f64::consts::LN_2, 0.0]);
        assert!((two[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((two[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(fc_softmax_forward(&[1.0, 2.0], &[0.0; 5], 2, None).is_err());
    }

    proptest! {
        #[test]
        fn conv_matches_naive_bitwise(
            n in 1usize..=8, t in 1usize..=8, w in 1usize..=8, m in 1usize..=8,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = SignalTensor::from_vec(n, t, (0..n * t).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let f = FilterBank::from_fn(n, w, m, |_, _, _| rng.random_range(-1.0..1.0)).unwrap();
            let fast = conv1d_forward(&x, &f, None).unwrap();
            let slow = naive_conv(&x, &f);
            prop_assert!(fast.values().iter().zip(&slow).all(|(a, b)| a.to_bits() == b.to_bits()));
        }

        #[test]
        fn conv_pool_shift(
            len in 8usize..24, w in 1usize..4, seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = 2;
            let x = SignalTensor::from_vec(2, len, (0..2 * len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let f = FilterBank::from_fn(2, w, 3, |_, _, _| rng.random_range(-1.0..1.0)).unwrap();
            let mut shifted = Vec::new();
            for c in 0..2 {
                shifted.extend_from_slice(&x.channel(c)[s..]);
                shifted.extend(std::iter::repeat_n(0.0, s));
            }
            let xs = SignalTensor::from_vec(2, len, shifted).unwrap();
            let (p, _) = maxpool_forward(&conv1d_forward(&x, &f, None).unwrap(), s).unwrap();
            let (ps, _) = maxpool_forward(&conv1d_forward(&xs, &f, None).unwrap(), s).unwrap();
            // shifted cell q covers original frames (q+1)*s .. (q+2)*s; valid while the
            // window stays clear of the final w-1 frames
            for q in 0..ps.length() {
                let last_frame = (q + 2) * s - 1;
                if last_frame + (w - 1) + s > len - 1 {
                    continue;
                }
                for c in 0..3 {
                    prop_assert_eq!(ps.get(c, q).to_bits(), p.get(c, q + 1).to_bits());
                }
            }
        }

        #[test]
        fn softmax_sums_to_one_and_shifts(
            logits in prop::collection::vec(-512i32..512, 1..12),
            shift in -256i32..256,
        ) {
            // dyadic logits make the constant shift exact
            let z: Vec<f64> = logits.iter().map(|v| *v as f64 / 64.0).collect();
            let zs: Vec<f64> = z.iter().map(|v| v + shift as f64 / 64.0).collect();
            let p = softmax(&z);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let ps = softmax(&zs);
            prop_assert!(p.iter().zip(&ps).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
