//! Canonical agent orderings by spatial proximity.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::{AgentTrack, PossessionSample, TrajectorySample};

/// Agent slots with the key first and the rest by ascending distance to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonOrdering {
    order: Vec<usize>,
}

impl PersonOrdering {
    /// Validates that `order` is a permutation of `0..len`.
    pub fn new(order: Vec<usize>) -> Result<Self, ModelError> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return Err(ModelError::InvalidOrdering(order));
            }
        }
        if order.is_empty() {
            return Err(ModelError::InvalidOrdering(order));
        }
        Ok(Self { order })
    }

    pub fn key(&self) -> usize {
        self.order[0]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Frame used as the event reference: the centre of the window (frame 8 of
/// a 16-frame window, index 7).
pub fn center_index(window: usize) -> usize {
    window.saturating_sub(1) / 2
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Orders agents by Euclidean distance to `key` at the window centre. Agents
/// missing at the centre use their nearest present frame; agents never
/// present go last. Ties fall back to the smaller slot index.
pub fn proximity_order(
    sample: &TrajectorySample,
    key: usize,
) -> Result<PersonOrdering, ModelError> {
    let np = sample.persons.len();
    if key >= np {
        return Err(ModelError::KeyAbsent(key));
    }
    let c = center_index(sample.window());
    let anchor = sample.persons[key]
        .nearest_position(c)
        .ok_or(ModelError::KeyAbsent(key))?;
    let mut others: Vec<(Option<f64>, usize)> = (0..np)
        .filter(|&i| i != key)
        .map(|i| {
            (
                sample.persons[i]
                    .nearest_position(c)
                    .map(|p| dist(p, anchor)),
                i,
            )
        })
        .collect();
    others.sort_by(|a, b| cmp_optional(a.0, b.0).then(a.1.cmp(&b.1)));
    let mut order = Vec::with_capacity(np);
    order.push(key);
    order.extend(others.into_iter().map(|(_, i)| i));
    PersonOrdering::new(order)
}

fn cmp_optional(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Mean ball distance over frames where both are present, plus the distance
/// at the first such frame (tie-break).
fn ball_proximity(ball: &AgentTrack, player: &AgentTrack) -> Option<(f64, f64)> {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut first = None;
    for t in 0..ball.len().min(player.len()) {
        if let (Some(b), Some(p)) = (ball.position(t), player.position(t)) {
            let d = dist(b, p);
            first.get_or_insert(d);
            sum += d;
            n += 1;
        }
    }
    first.map(|f| (sum / n as f64, f))
}

/// Player slots ordered by mean distance to the ball; players never present
/// alongside the ball go last.
pub fn ball_order(sample: &PossessionSample) -> Result<Vec<usize>, ModelError> {
    if !sample.ball.is_present() {
        return Err(ModelError::MissingBall);
    }
    let mut keyed: Vec<(Option<(f64, f64)>, usize)> = sample
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| (ball_proximity(&sample.ball, p), i))
        .collect();
    keyed.sort_by(|a, b| {
        cmp_optional(a.0.map(|v| v.0), b.0.map(|v| v.0))
            .then(cmp_optional(a.0.map(|v| v.1), b.0.map(|v| v.1)))
            .then(a.1.cmp(&b.1))
    });
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}
