//! Synthetic rink events with exact ground truth.
//!
//! Every event class has its own kinematic motif for the key agent (and, for
//! passes and puck protection, for a second agent). The motifs are written
//! into per-game track tables and cut into windows by [`window_events`], so
//! generated data goes through the same preprocessing as recorded tracks.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    window_events, AgentTrack, CoordBounds, DataError, Dataset, DatasetHeader, EventMark, Task,
    TrackTable, TrajectorySample, EVENT_WINDOW,
};
use crate::nn::EVENT_LOSS_WEIGHTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventClass {
    Pass,
    DumpOut,
    DumpIn,
    Shot,
    Carry,
    PuckProtection,
}

pub const EVENT_CLASSES: [EventClass; 6] = [
    EventClass::Pass,
    EventClass::DumpOut,
    EventClass::DumpIn,
    EventClass::Shot,
    EventClass::Carry,
    EventClass::PuckProtection,
];

impl EventClass {
    pub fn name(self) -> &'static str {
        match self {
            EventClass::Pass => "pass",
            EventClass::DumpOut => "dump_out",
            EventClass::DumpIn => "dump_in",
            EventClass::Shot => "shot",
            EventClass::Carry => "carry",
            EventClass::PuckProtection => "puck_protection",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        EVENT_CLASSES.into_iter().find(|c| c.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn class_names() -> Vec<String> {
        EVENT_CLASSES.iter().map(|c| c.name().to_string()).collect()
    }
}

/// Class proportions for generation, normalised to sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMix(Vec<f64>);

impl ClassMix {
    pub fn new(weights: Vec<f64>) -> Result<Self, DataError> {
        if weights.len() != EVENT_CLASSES.len() {
            return Err(DataError::Invalid(format!(
                "class mix needs {} entries, got {}",
                EVENT_CLASSES.len(),
                weights.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || sum <= 0.0 {
            return Err(DataError::Invalid(format!("invalid class mix {weights:?}")));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    /// Parses `name=p,name=p`; classes not named share the remaining mass in
    /// proportion to the default mix.
    pub fn parse(spec: &str) -> Result<Self, DataError> {
        let base = Self::default();
        let mut fixed: Vec<Option<f64>> = vec![None; EVENT_CLASSES.len()];
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, p) = part.split_once('=').ok_or_else(|| {
                DataError::Invalid(format!("expected name=p in mix, got {part:?}"))
            })?;
            let class = EventClass::from_name(name.trim())
                .ok_or_else(|| DataError::Invalid(format!("unknown event class {name:?}")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| DataError::Invalid(format!("bad proportion in {part:?}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(DataError::Invalid(format!(
                    "proportion out of [0, 1] in {part:?}"
                )));
            }
            fixed[class.index()] = Some(p);
        }
        let used: f64 = fixed.iter().flatten().sum();
        if used > 1.0 + 1e-12 {
            return Err(DataError::Invalid(format!(
                "mix proportions sum to {used} > 1"
            )));
        }
        let free: f64 = fixed
            .iter()
            .zip(&base.0)
            .filter(|(f, _)| f.is_none())
            .map(|(_, b)| b)
            .sum();
        let weights = fixed
            .iter()
            .zip(&base.0)
            .map(|(f, b)| {
                f.unwrap_or(if free > 0.0 {
                    (1.0 - used) * b / free
                } else {
                    0.0
                })
            })
            .collect();
        Self::new(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Exact per-class counts for `n` samples (largest remainder).
    pub fn counts(&self, n: usize) -> Vec<usize> {
        let raw: Vec<f64> = self.0.iter().map(|p| p * n as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
        let mut rest: Vec<(f64, usize)> = raw
            .iter()
            .enumerate()
            .map(|(i, r)| (r - r.floor(), i))
            .collect();
        rest.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let missing = n - counts.iter().sum::<usize>();
        for &(_, i) in rest.iter().take(missing) {
            counts[i] += 1;
        }
        counts
    }
}

impl Default for ClassMix {
    /// Proportional to the inverse event loss weights: passes dominate
    /// (about 55%) and dump-ins are rarest.
    fn default() -> Self {
        Self::new(EVENT_LOSS_WEIGHTS.iter().map(|w| 1.0 / w).collect())
            .expect("weights are positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventSynthConfig {
    pub samples: usize,
    pub games: u32,
    pub mix: ClassMix,
    /// Standard deviation of the Gaussian position jitter, in feet.
    pub noise_std: f64,
    /// Probability that a non-key participant loses a few frames at either
    /// end of the window.
    pub dropout: f64,
    /// Probability that a non-key participant is missing from the whole window.
    pub missing: f64,
    pub group_size: usize,
}

impl Default for EventSynthConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            games: 8,
            mix: ClassMix::default(),
            noise_std: 0.5,
            dropout: 0.1,
            missing: 0.03,
            group_size: 5,
        }
    }
}

/// One game: the track table and its annotated events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventGame {
    pub table: TrackTable,
    pub events: Vec<EventMark>,
}

/// Frames reserved per event in a game table; far more than the separation
/// rule needs, so no generated event is ever dropped.
const SEGMENT: usize = 40;
/// Agents per game table. Those not taking part in an event are placed far
/// from it.
const AGENTS_PER_GAME: usize = 8;
const GOAL: (f64, f64) = (89.0, 0.0);
/// Speeds below are in feet per window frame at 1x pace; windows are taken
/// at roughly 10 frames per second, so skating moves about 3 ft a frame.
const PACE: f64 = 3.0;

type Path = Vec<(f64, f64)>;

fn unit(theta: f64) -> (f64, f64) {
    (theta.cos(), theta.sin())
}

/// Positions at window frames `0..16` for motion starting at `p` (the
/// centre-frame position) with per-frame velocity `vel(k)` between frame
/// `k` and `k + 1`.
fn integrate(centre_pos: (f64, f64), vel: impl Fn(usize) -> (f64, f64)) -> Path {
    let c = EVENT_WINDOW / 2 - 1;
    let mut path = vec![(0.0, 0.0); EVENT_WINDOW];
    path[c] = centre_pos;
    for k in (0..c).rev() {
        let v = vel(k);
        path[k] = (path[k + 1].0 - v.0, path[k + 1].1 - v.1);
    }
    for k in c + 1..EVENT_WINDOW {
        let v = vel(k - 1);
        path[k] = (path[k - 1].0 + v.0, path[k - 1].1 + v.1);
    }
    path
}

fn wander<R: Rng>(rng: &mut R, centre_pos: (f64, f64), max_speed: f64) -> Path {
    let speed = PACE * rng.random_range(0.0..max_speed);
    let theta = rng.random_range(-PI..PI);
    let turn = rng.random_range(-0.05..0.05);
    integrate(centre_pos, |k| {
        let (x, y) = unit(theta + turn * k as f64);
        (speed * x, speed * y)
    })
}

fn near<R: Rng>(rng: &mut R, p: (f64, f64), lo: f64, hi: f64) -> (f64, f64) {
    let d = rng.random_range(lo..hi);
    let (ux, uy) = unit(rng.random_range(-PI..PI));
    (p.0 + d * ux, p.1 + d * uy)
}

/// Key path plus the paths of the other participants (the first of which
/// is the pass receiver or the puck-protection opponent).
fn motif<R: Rng>(rng: &mut R, class: EventClass, others: usize) -> (Path, Vec<Path>) {
    let c = (EVENT_WINDOW / 2 - 1) as f64;
    let mut rest = Vec::with_capacity(others);
    let key = match class {
        EventClass::Pass => {
            let p = (rng.random_range(-60.0..60.0), rng.random_range(-25.0..25.0));
            let speed = PACE * rng.random_range(0.8..1.5);
            let theta = rng.random_range(-PI..PI);
            let v = (speed * theta.cos(), speed * theta.sin());
            let turn = theta + rng.random_range(-PI / 2.0..PI / 2.0);
            let v_after = (0.3 * speed * turn.cos(), 0.3 * speed * turn.sin());
            let key = integrate(p, |k| if (k as f64) < c { v } else { v_after });
            let r = near(rng, p, 12.0, 25.0);
            let u = unit(rng.random_range(-PI..PI));
            let slow = PACE * rng.random_range(0.1..0.4);
            rest.push(integrate(r, |k| {
                if (k as f64) < c {
                    (slow * u.0, slow * u.1)
                } else {
                    v
                }
            }));
            key
        }
        EventClass::Shot => {
            let p = (rng.random_range(30.0..60.0), rng.random_range(-28.0..28.0));
            let s0 = rng.random_range(0.3..0.6);
            let a = rng.random_range(0.05..0.1);
            let dir = {
                let (dx, dy) = (GOAL.0 - p.0, GOAL.1 - p.1);
                let n = dx.hypot(dy);
                (dx / n, dy / n)
            };
            integrate(p, |k| {
                let s = PACE * (s0 + a * k as f64);
                (s * dir.0, s * dir.1)
            })
        }
        EventClass::Carry => {
            let p = (rng.random_range(-65.0..65.0), rng.random_range(-30.0..30.0));
            let speed = PACE * rng.random_range(0.8..1.4);
            let theta = rng.random_range(-PI..PI);
            let turn = rng.random_range(-0.03..0.03);
            integrate(p, |k| {
                let (x, y) = unit(theta + turn * (k as f64 - c));
                (speed * x, speed * y)
            })
        }
        EventClass::DumpIn | EventClass::DumpOut => {
            let x = if class == EventClass::DumpIn {
                rng.random_range(20.0..40.0)
            } else {
                rng.random_range(-85.0..-45.0)
            };
            let p = (x, rng.random_range(-30.0..30.0));
            let speed = PACE * rng.random_range(2.0..3.0);
            let theta = rng.random_range(-PI / 4.0..PI / 4.0);
            integrate(p, |_| (speed * theta.cos(), speed * theta.sin()))
        }
        EventClass::PuckProtection => {
            let p = (rng.random_range(-70.0..70.0), rng.random_range(-30.0..30.0));
            let r = rng.random_range(4.0..8.0);
            let omega =
                rng.random_range(0.25..0.45) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let phase = rng.random_range(-PI..PI);
            let gap = rng.random_range(3.0..5.0);
            let at = |k: usize, rad: f64| {
                let a = phase + omega * (k as f64 - c);
                (p.0 + rad * a.cos(), p.1 + rad * a.sin())
            };
            rest.push((0..EVENT_WINDOW).map(|k| at(k, r + gap)).collect());
            (0..EVENT_WINDOW).map(|k| at(k, r)).collect()
        }
    };
    let anchor = key[EVENT_WINDOW / 2 - 1];
    while rest.len() < others {
        let q = near(rng, anchor, 8.0, 40.0);
        rest.push(wander(rng, q, 1.2));
    }
    (key, rest)
}

fn far_from(p: (f64, f64)) -> (f64, f64) {
    // mirror through centre ice and push out; always > 60 ft from p
    let x = if p.0 >= 0.0 { -90.0 } else { 90.0 };
    (x, -p.1.signum() * 35.0)
}

/// Per-game track tables with annotated events. Deterministic in `seed`.
pub fn generate_event_tracks(
    seed: u64,
    cfg: &EventSynthConfig,
) -> Result<Vec<EventGame>, DataError> {
    if cfg.games == 0 || cfg.group_size < 2 || cfg.group_size > AGENTS_PER_GAME {
        return Err(DataError::Invalid(format!(
            "need at least one game and 2..={AGENTS_PER_GAME} agents per event"
        )));
    }
    if !(cfg.noise_std >= 0.0
        && (0.0..=1.0).contains(&cfg.dropout)
        && (0.0..=1.0).contains(&cfg.missing))
    {
        return Err(DataError::Invalid(
            "noise and dropout rates must be non-negative probabilities".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.noise_std.max(f64::MIN_POSITIVE)).expect("valid std");
    let mut labels: Vec<EventClass> = cfg
        .mix
        .counts(cfg.samples)
        .into_iter()
        .zip(EVENT_CLASSES)
        .flat_map(|(n, c)| std::iter::repeat_n(c, n))
        .collect();
    labels.shuffle(&mut rng);

    let games = cfg.games as usize;
    let mut out = Vec::with_capacity(games);
    for g in 0..games {
        let mine: Vec<EventClass> = labels.iter().skip(g).step_by(games).copied().collect();
        let frames = mine.len() * SEGMENT;
        let mut positions: Vec<Vec<Option<(f64, f64)>>> = vec![vec![None; frames]; AGENTS_PER_GAME];
        let mut events = Vec::with_capacity(mine.len());
        for (e, &class) in mine.iter().enumerate() {
            let mut ids: Vec<usize> = (0..AGENTS_PER_GAME).collect();
            ids.shuffle(&mut rng);
            let (key_path, rest) = motif(&mut rng, class, cfg.group_size - 1);
            let anchor = key_path[EVENT_WINDOW / 2 - 1];
            let start = e * SEGMENT + (SEGMENT - EVENT_WINDOW) / 2;
            let centre = start + EVENT_WINDOW / 2 - 1;
            let mut paths: Vec<(usize, Path, bool)> = vec![(ids[0], key_path, true)];
            for (i, path) in rest.into_iter().enumerate() {
                paths.push((ids[1 + i], path, false));
            }
            for &id in &ids[cfg.group_size..] {
                paths.push((id, wander(&mut rng, far_from(anchor), 1.0), false));
            }
            for (id, path, is_key) in paths {
                let mut present = [true; EVENT_WINDOW];
                if !is_key {
                    if rng.random_bool(cfg.missing) {
                        present = [false; EVENT_WINDOW];
                    } else if rng.random_bool(cfg.dropout) {
                        let span = rng.random_range(1..=6);
                        if rng.random_bool(0.5) {
                            present[..span].fill(false);
                        } else {
                            present[EVENT_WINDOW - span..].fill(false);
                        }
                    }
                }
                for (k, &(x, y)) in path.iter().enumerate() {
                    if present[k] {
                        let (jx, jy) = if cfg.noise_std > 0.0 {
                            (noise.sample(&mut rng), noise.sample(&mut rng))
                        } else {
                            (0.0, 0.0)
                        };
                        positions[id][start + k] = Some((x + jx, y + jy));
                    }
                }
            }
            events.push(EventMark {
                center_frame: centre as i64,
                key: ids[0],
                label: class.index(),
            });
        }
        let table = TrackTable {
            game: g as u32,
            agents: positions
                .iter()
                .map(|p| AgentTrack::from_positions(p))
                .collect(),
        };
        out.push(EventGame { table, events });
    }
    Ok(out)
}

/// A windowed event dataset over rink coordinates. Deterministic in `seed`;
/// per-class counts follow `cfg.mix` exactly.
pub fn generate_events(
    seed: u64,
    cfg: &EventSynthConfig,
) -> Result<Dataset<TrajectorySample>, DataError> {
    let games = generate_event_tracks(seed, cfg)?;
    let mut samples = Vec::with_capacity(cfg.samples);
    for g in &games {
        samples.extend(window_events(&g.table, &g.events, cfg.group_size)?);
    }
    let header = DatasetHeader::new(
        Task::Event,
        cfg.group_size,
        EVENT_WINDOW,
        CoordBounds::RINK,
        EventClass::class_names(),
    );
    Dataset::new(header, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(samples: usize) -> EventSynthConfig {
        EventSynthConfig {
            samples,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_events(7, &small(120)).unwrap();
        let b = generate_events(7, &small(120)).unwrap();
        let c = generate_events(8, &small(120)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn class_counts_follow_mix() {
        let ds = generate_events(1, &small(3000)).unwrap();
        assert_eq!(ds.len(), 3000);
        let counts = ds.class_counts();
        for (n, p) in counts.iter().zip(ClassMix::default().as_slice()) {
            assert!((*n as f64 / 3000.0 - p).abs() < 0.02);
        }
        let pass = counts[0] as f64 / 3000.0;
        assert!(pass > 0.5 && pass < 0.6, "pass share {pass}");
    }

    #[test]
    fn mix_override_renormalises_the_rest() {
        let m = ClassMix::parse("pass=0.5").unwrap();
        assert!((m.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((m.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = ClassMix::default();
        let ratio = m.as_slice()[3] / m.as_slice()[4];
        assert!((ratio - d.as_slice()[3] / d.as_slice()[4]).abs() < 1e-12);
        assert!(ClassMix::parse("pass=0.7,carry=0.5").is_err());
        assert!(ClassMix::parse("goal=0.1").is_err());
    }

    #[test]
    fn receiver_takes_over_the_key_velocity() {
        let cfg = EventSynthConfig {
            samples: 40,
            noise_std: 0.0,
            dropout: 0.0,
            missing: 0.0,
            mix: ClassMix::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (key, rest) = motif(&mut rng, EventClass::Pass, 4);
            let recv = &rest[0];
            let v_key = (key[6].0 - key[5].0, key[6].1 - key[5].1);
            for k in 7..EVENT_WINDOW - 1 {
                let v = (recv[k + 1].0 - recv[k].0, recv[k + 1].1 - recv[k].1);
                assert!((v.0 - v_key.0).abs() < 1e-9 && (v.1 - v_key.1).abs() < 1e-9);
            }
        }
        let ds = generate_events(0, &cfg).unwrap();
        assert!(ds
            .samples
            .iter()
            .all(|s| s.persons.iter().all(AgentTrack::is_present)));
    }

    #[test]
    fn every_sample_keeps_its_key_and_label() {
        let ds = generate_events(5, &small(200)).unwrap();
        for s in &ds.samples {
            let k = s.key.unwrap();
            assert!(s.persons[k].mask.iter().all(|m| *m));
        }
    }
}
