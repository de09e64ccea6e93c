//! Dense channels-by-time arrays.
//!
//! Storage is channel-major: all of channel 0's timeline, then channel 1's,
//! and so on. Values are `f64` throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor must have at least one channel")]
    ZeroChannels,
    #[error("expected {expected} values for shape {channels}x{length}, got {actual}")]
    ValueCount {
        channels: usize,
        length: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("cannot stack an empty list of tensors")]
    EmptyStack,
    #[error("stacked parts disagree in length: {expected} vs {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("slice [{start}, {end}) out of range for length {length}")]
    SliceOutOfRange {
        start: usize,
        end: usize,
        length: usize,
    },
    #[error("channel range [{start}, {end}) out of range for {channels} channels")]
    ChannelOutOfRange {
        start: usize,
        end: usize,
        channels: usize,
    },
}

/// A `channels x length` array of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalTensor {
    channels: usize,
    length: usize,
    values: Vec<f64>,
}

impl SignalTensor {
    pub fn zeros(channels: usize, length: usize) -> Result<Self, TensorError> {
        if channels == 0 {
            return Err(TensorError::ZeroChannels);
        }
        Ok(Self {
            channels,
            length,
            values: vec![0.0; channels * length],
        })
    }

    /// Builds a tensor from channel-major values, rejecting non-finite entries.
    pub fn from_vec(channels: usize, length: usize, values: Vec<f64>) -> Result<Self, TensorError> {
        if channels == 0 {
            return Err(TensorError::ZeroChannels);
        }
        if values.len() != channels * length {
            return Err(TensorError::ValueCount {
                channels,
                length,
                expected: channels * length,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite(i));
        }
        Ok(Self {
            channels,
            length,
            values,
        })
    }

    /// Builds a tensor from one row per channel.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let length = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != length) {
            return Err(TensorError::LengthMismatch {
                expected: length,
                actual: bad.len(),
            });
        }
        Self::from_vec(rows.len(), length, rows.concat())
    }

    /// Internal constructor for layer outputs whose finiteness follows from
    /// finite inputs.
    pub(crate) fn from_parts(channels: usize, length: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), channels * length);
        Self {
            channels,
            length,
            values,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.length)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, channel: usize, t: usize) -> f64 {
        self.values[channel * self.length + t]
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.length..(channel + 1) * self.length]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Concatenates parts along the channel axis, in list order.
    pub fn stack_channels(parts: &[&SignalTensor]) -> Result<Self, TensorError> {
        let first = parts.first().ok_or(TensorError::EmptyStack)?;
        let length = first.length;
        let mut channels = 0;
        for p in parts {
            if p.length != length {
                return Err(TensorError::LengthMismatch {
                    expected: length,
                    actual: p.length,
                });
            }
            channels += p.channels;
        }
        let mut values = Vec::with_capacity(channels * length);
        for p in parts {
            values.extend_from_slice(&p.values);
        }
        Ok(Self::from_parts(channels, length, values))
    }

    /// Channels `[start, start + count)`, the inverse of [`Self::stack_channels`].
    pub fn slice_channels(&self, start: usize, count: usize) -> Result<Self, TensorError> {
        let end = start + count;
        if count == 0 || end > self.channels {
            return Err(TensorError::ChannelOutOfRange {
                start,
                end,
                channels: self.channels,
            });
        }
        let values = self.values[start * self.length..end * self.length].to_vec();
        Ok(Self::from_parts(count, self.length, values))
    }

    /// Columns `[start, start + len)` of every channel.
    pub fn slice_time(&self, start: usize, len: usize) -> Result<Self, TensorError> {
        let end = start + len;
        if end > self.length {
            return Err(TensorError::SliceOutOfRange {
                start,
                end,
                length: self.length,
            });
        }
        let mut values = Vec::with_capacity(self.channels * len);
        for c in 0..self.channels {
            values.extend_from_slice(&self.channel(c)[start..end]);
        }
        Ok(Self::from_parts(self.channels, len, values))
    }

    /// Time-major copy: `out[t * channels + c]`.
    pub(crate) fn to_time_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for c in 0..self.channels {
            for (t, v) in self.channel(c).iter().enumerate() {
                out[t * self.channels + c] = *v;
            }
        }
        out
    }

    /// Inverse of [`Self::to_time_major`].
    pub(crate) fn from_time_major(channels: usize, length: usize, tm: &[f64]) -> Self {
        let mut values = vec![0.0; channels * length];
        for t in 0..length {
            for c in 0..channels {
                values[c * length + t] = tm[t * channels + c];
            }
        }
        Self::from_parts(channels, length, values)
    }
}

/// Convolution filters indexed `(in_channel i, tap j, filter k)`, stored with
/// the filter index fastest: `weights[(i * width + j) * out_channels + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    in_channels: usize,
    width: usize,
    out_channels: usize,
    weights: Vec<f64>,
}

impl FilterBank {
    pub fn new(
        in_channels: usize,
        width: usize,
        out_channels: usize,
        weights: Vec<f64>,
    ) -> Result<Self, TensorError> {
        if in_channels == 0 || width == 0 || out_channels == 0 {
            return Err(TensorError::ZeroChannels);
        }
        let expected = in_channels * width * out_channels;
        if weights.len() != expected {
            return Err(TensorError::ValueCount {
                channels: in_channels,
                length: width * out_channels,
                expected,
                actual: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite(i));
        }
        Ok(Self {
            in_channels,
            width,
            out_channels,
            weights,
        })
    }

    /// Builds a bank from a closure over `(i, j, k)`.
    pub fn from_fn(
        in_channels: usize,
        width: usize,
        out_channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, TensorError> {
        let mut weights = Vec::with_capacity(in_channels * width * out_channels);
        for i in 0..in_channels {
            for j in 0..width {
                for k in 0..out_channels {
                    weights.push(f(i, j, k));
                }
            }
        }
        Self::new(in_channels, width, out_channels, weights)
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.weights[(i * self.width + j) * self.out_channels + k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zeros_shapes() {
        let z = SignalTensor::zeros(2, 3).unwrap();
        assert_eq!(z.values(), &[0.0; 6]);
        let e = SignalTensor::zeros(1, 0).unwrap();
        assert_eq!(e.shape(), (1, 0));
        assert!(e.values().is_empty());
        let nba = SignalTensor::zeros(12, 200).unwrap();
        assert_eq!(nba.values().len(), 2400);
        assert_eq!(SignalTensor::zeros(0, 4), Err(TensorError::ZeroChannels));
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(matches!(
            SignalTensor::from_vec(2, 2, vec![0.0; 3]),
            Err(TensorError::ValueCount { .. })
        ));
        assert_eq!(
            SignalTensor::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(TensorError::NonFinite(1))
        );
    }

    #[test]
    fn stack_two_single_channel_parts() {
        let a = SignalTensor::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let b = SignalTensor::from_vec(1, 2, vec![3.0, 4.0]).unwrap();
        let s = SignalTensor::stack_channels(&[&a, &b]).unwrap();
        assert_eq!(s.shape(), (2, 2));
        assert_eq!(s.channel(0), &[1.0, 2.0]);
        assert_eq!(s.channel(1), &[3.0, 4.0]);
        assert_eq!(SignalTensor::stack_channels(&[&a]).unwrap(), a);
    }

    #[test]
    fn stack_six_agents_gives_nba_input() {
        let part = SignalTensor::zeros(2, 200).unwrap();
        let parts: Vec<&SignalTensor> = std::iter::repeat_n(&part, 6).collect();
        let s = SignalTensor::stack_channels(&parts).unwrap();
        assert_eq!(s.shape(), (12, 200));
    }

    #[test]
    fn stack_errors() {
        assert_eq!(
            SignalTensor::stack_channels(&[]),
            Err(TensorError::EmptyStack)
        );
        let a = SignalTensor::zeros(1, 2).unwrap();
        let b = SignalTensor::zeros(1, 3).unwrap();
        assert!(matches!(
            SignalTensor::stack_channels(&[&a, &b]),
            Err(TensorError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn slice_time_examples() {
        let x = SignalTensor::from_vec(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x.slice_time(0, 4).unwrap(), x);
        assert_eq!(x.slice_time(1, 2).unwrap().values(), &[2.0, 3.0]);
        assert!(matches!(
            x.slice_time(3, 2),
            Err(TensorError::SliceOutOfRange { .. })
        ));

        // 16-frame event window around center frame 100 of a longer series
        let long = SignalTensor::from_vec(1, 300, (0..300).map(f64::from).collect()).unwrap();
        let w = long.slice_time(100 - 7, 16).unwrap();
        assert_eq!(w.get(0, 0), 93.0);
        assert_eq!(w.get(0, 7), 100.0);
        assert_eq!(w.get(0, 15), 108.0);
    }

    #[test]
    fn time_major_round_trip() {
        let x = SignalTensor::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let tm = x.to_time_major();
        assert_eq!(tm, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(SignalTensor::from_time_major(2, 3, &tm), x);
    }

    fn parts_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
        (0usize..6, 1usize..5).prop_flat_map(|(len, n)| {
            (
                Just(len),
                prop::collection::vec(
                    (1usize..4)
                        .prop_flat_map(move |c| prop::collection::vec(-1e6f64..1e6, c * len)),
                    n,
                ),
            )
        })
    }

    proptest! {
        #[test]
        fn stack_then_slice_recovers_parts((len, raw) in parts_strategy()) {
            let parts: Vec<SignalTensor> = raw
                .iter()
                .map(|v| {
                    let c = v.len().checked_div(len).unwrap_or(1);
                    SignalTensor::from_vec(c, len, v.clone()).unwrap()
                })
                .collect();
            let refs: Vec<&SignalTensor> = parts.iter().collect();
            let stacked = SignalTensor::stack_channels(&refs).unwrap();
            let mut start = 0;
            for p in &parts {
                let back = stacked.slice_channels(start, p.channels()).unwrap();
                prop_assert_eq!(back.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                                p.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
                start += p.channels();
            }
        }

        #[test]
        fn slice_time_composes(
            data in prop::collection::vec(-10.0f64..10.0, 40),
            (a, la, b, lb) in (0usize..=20)
                .prop_flat_map(|a| (Just(a), 0..=20 - a))
                .prop_flat_map(|(a, la)| (Just(a), Just(la), 0..=la))
                .prop_flat_map(|(a, la, b)| (Just(a), Just(la), Just(b), 0..=la - b)),
        ) {
            let x = SignalTensor::from_vec(2, 20, data).unwrap();
            let twice = x.slice_time(a, la).unwrap().slice_time(b, lb).unwrap();
            let once = x.slice_time(a + b, lb).unwrap();
            prop_assert_eq!(twice, once);
        }

        #[test]
        fn zeros_have_zero_mass(c in 1usize..16, t in 0usize..64) {
            let z = SignalTensor::zeros(c, t).unwrap();
            prop_assert_eq!(z.values().iter().map(|v| v.abs()).sum::<f64>(), 0.0);
        }
    }
}
