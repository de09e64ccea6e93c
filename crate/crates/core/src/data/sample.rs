use serde::{Deserialize, Serialize};

use super::DataError;
use crate::tensor::SignalTensor;

/// One agent's `(x, y)` series with a per-frame presence mask. Absent frames
/// hold exactly `0.0` in both coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrack {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mask: Vec<bool>,
}

impl AgentTrack {
    pub fn absent(len: usize) -> Self {
        Self {
            x: vec![0.0; len],
            y: vec![0.0; len],
            mask: vec![false; len],
        }
    }

    /// Track from per-frame positions; `None` frames become masked zeros.
    pub fn from_positions(frames: &[Option<(f64, f64)>]) -> Self {
        let mut t = Self::absent(frames.len());
        for (i, f) in frames.iter().enumerate() {
            if let Some((x, y)) = f {
                t.x[i] = *x;
                t.y[i] = *y;
                t.mask[i] = true;
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn is_present(&self) -> bool {
        self.mask.iter().any(|m| *m)
    }

    pub fn position(&self, t: usize) -> Option<(f64, f64)> {
        self.mask[t].then(|| (self.x[t], self.y[t]))
    }

    /// Position at frame `t`, or at the nearest present frame (earlier frame
    /// on equal distance). `None` if the agent is never present.
    pub fn nearest_position(&self, t: usize) -> Option<(f64, f64)> {
        let n = self.len();
        (0..n).find_map(|d| {
            if t >= d {
                if let Some(p) = self.position(t - d) {
                    return Some(p);
                }
            }
            if t + d < n {
                if let Some(p) = self.position(t + d) {
                    return Some(p);
                }
            }
            None
        })
    }

    pub fn validate(&self, len: usize) -> Result<(), String> {
        if self.x.len() != len || self.y.len() != len || self.mask.len() != len {
            return Err(format!(
                "series lengths x={} y={} mask={} do not match T={len}",
                self.x.len(),
                self.y.len(),
                self.mask.len()
            ));
        }
        for t in 0..len {
            if !(self.x[t].is_finite() && self.y[t].is_finite()) {
                return Err(format!("non-finite coordinate at frame {t}"));
            }
            if !self.mask[t] && (self.x[t] != 0.0 || self.y[t] != 0.0) {
                return Err(format!("absent frame {t} carries non-zero coordinates"));
            }
        }
        Ok(())
    }

    /// Normalised 2-channel `(x, y)` tensor; absent frames stay zero.
    pub fn to_tensor(&self, bounds: &CoordBounds) -> SignalTensor {
        let n = self.len();
        let mut values = vec![0.0; 2 * n];
        for t in 0..n {
            if self.mask[t] {
                let (nx, ny) = bounds.normalize(self.x[t], self.y[t]);
                values[t] = nx;
                values[n + t] = ny;
            }
        }
        SignalTensor::from_parts(2, n, values)
    }
}

/// Playing-surface rectangle in world units, mapped affinely onto `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl CoordBounds {
    /// Hockey rink in feet, centred on centre ice.
    pub const RINK: CoordBounds = CoordBounds {
        x_min: -100.0,
        x_max: 100.0,
        y_min: -42.5,
        y_max: 42.5,
    };

    /// Basketball court in feet, origin at a corner.
    pub const COURT: CoordBounds = CoordBounds {
        x_min: 0.0,
        x_max: 94.0,
        y_min: 0.0,
        y_max: 50.0,
    };

    pub fn validate(&self) -> Result<(), DataError> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min;
        if ok {
            Ok(())
        } else {
            Err(DataError::Invalid(format!(
                "degenerate coordinate bounds {self:?}"
            )))
        }
    }

    pub fn normalize(&self, x: f64, y: f64) -> (f64, f64) {
        (
            2.0 * (x - self.x_min) / (self.x_max - self.x_min) - 1.0,
            2.0 * (y - self.y_min) / (self.y_max - self.y_min) - 1.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMeta {
    pub game: u32,
    pub center_frame: i64,
}

/// One event window: `Np` agent slots of `T` frames, the optional key agent
/// slot and the event label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub persons: Vec<AgentTrack>,
    pub key: Option<usize>,
    pub label: usize,
    pub meta: EventMeta,
}

impl TrajectorySample {
    pub fn window(&self) -> usize {
        self.persons.first().map_or(0, AgentTrack::len)
    }

    pub fn validate(&self, np: usize, t: usize, classes: usize) -> Result<(), String> {
        if self.persons.len() != np {
            return Err(format!(
                "expected {np} agent slots, found {}",
                self.persons.len()
            ));
        }
        for (i, p) in self.persons.iter().enumerate() {
            p.validate(t).map_err(|e| format!("agent {i}: {e}"))?;
        }
        if let Some(k) = self.key {
            if k >= np {
                return Err(format!("key index {k} out of range for {np} agents"));
            }
        }
        if self.label >= classes {
            return Err(format!(
                "label {} out of range for {classes} classes",
                self.label
            ));
        }
        Ok(())
    }

    /// Copy with agent slots reordered so that new slot `i` holds old slot
    /// `perm[i]`; the key index follows its agent.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let persons = perm.iter().map(|&p| self.persons[p].clone()).collect();
        let key = self.key.map(|k| {
            perm.iter()
                .position(|&p| p == k)
                .expect("perm is a bijection")
        });
        Self {
            persons,
            key,
            label: self.label,
            meta: self.meta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PossessionMeta {
    pub game: u32,
    pub possession: u32,
}

/// One possession: the ball and `Np` players over `T` sampled frames, labelled
/// with the offensive team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossessionSample {
    pub ball: AgentTrack,
    pub players: Vec<AgentTrack>,
    pub team: usize,
    pub meta: PossessionMeta,
}

impl PossessionSample {
    pub fn window(&self) -> usize {
        self.ball.len()
    }

    pub fn validate(&self, np: usize, t: usize, classes: usize) -> Result<(), String> {
        if self.players.len() != np {
            return Err(format!(
                "expected {np} players, found {}",
                self.players.len()
            ));
        }
        self.ball.validate(t).map_err(|e| format!("ball: {e}"))?;
        for (i, p) in self.players.iter().enumerate() {
            p.validate(t).map_err(|e| format!("player {i}: {e}"))?;
        }
        if self.team >= classes {
            return Err(format!(
                "team {} out of range for {classes} classes",
                self.team
            ));
        }
        Ok(())
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            ball: self.ball.clone(),
            players: perm.iter().map(|&p| self.players[p].clone()).collect(),
            team: self.team,
            meta: self.meta,
        }
    }
}
