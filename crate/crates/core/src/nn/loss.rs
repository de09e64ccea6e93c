use serde::{Deserialize, Serialize};

use super::NnError;

/// Class weights for pass, dump out, dump in, shot, carry and puck
/// protection, in that order.
pub const EVENT_LOSS_WEIGHTS: [f64; 6] = [0.07, 0.6, 1.0, 0.4, 0.2, 0.7];

/// Per-class positive loss weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LossWeights(Vec<f64>);

impl LossWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, NnError> {
        if weights.is_empty() {
            return Err(NnError::InvalidLossWeights("no classes".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(NnError::InvalidLossWeights(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0; classes.max(1)])
    }

    pub fn event_defaults() -> Self {
        Self(EVENT_LOSS_WEIGHTS.to_vec())
    }

    /// Weights proportional to `1 / count`, scaled so the rarest class gets
    /// 1. Classes with no samples get weight 1.
    pub fn inverse_frequency(counts: &[usize]) -> Result<Self, NnError> {
        let min = counts.iter().copied().filter(|c| *c > 0).min().unwrap_or(1);
        Self::new(
            counts
                .iter()
                .map(|c| if *c == 0 { 1.0 } else { min as f64 / *c as f64 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn scaled(&self, c: f64) -> Result<Self, NnError> {
        Self::new(self.0.iter().map(|w| w * c).collect())
    }
}

impl TryFrom<Vec<f64>> for LossWeights {
    type Error = NnError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<LossWeights> for Vec<f64> {
    fn from(w: LossWeights) -> Self {
        w.0
    }
}

fn check_label(probs: &[f64], label: usize, weights: &LossWeights) -> Result<(), NnError> {
    if label >= probs.len() || label >= weights.len() {
        return Err(NnError::LabelOutOfRange {
            label,
            classes: probs.len().min(weights.len()),
        });
    }
    if probs.len() != weights.len() {
        return Err(NnError::ShapeMismatch {
            what: "loss weights vs classes",
            expected: probs.len(),
            actual: weights.len(),
        });
    }
    Ok(())
}

/// `w[label] * -ln(probs[label])`.
pub fn weighted_cross_entropy(
    probs: &[f64],
    label: usize,
    weights: &LossWeights,
) -> Result<f64, NnError> {
    check_label(probs, label, weights)?;
    Ok(weights.get(label) * -probs[label].ln())
}

/// Gradient of [`weighted_cross_entropy`] with respect to the logits that
/// produced `probs` through softmax: `w[label] * (probs - onehot(label))`.
pub fn weighted_cross_entropy_logit_grad(
    probs: &[f64],
    label: usize,
    weights: &LossWeights,
) -> Result<Vec<f64>, NnError> {
    check_label(probs, label, weights)?;
    let w = weights.get(label);
    Ok(probs
        .iter()
        .enumerate()
        .map(|(c, p)| w * (p - if c == label { 1.0 } else { 0.0 }))
        .collect())
}

/// Mean over samples of [`weighted_cross_entropy`].
pub fn batch_loss(batch: &[(Vec<f64>, usize)], weights: &LossWeights) -> Result<f64, NnError> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (p, l) in batch {
        sum += weighted_cross_entropy(p, *l, weights)?;
    }
    Ok(sum / batch.len() as f64)
}
