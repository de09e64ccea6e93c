//! Synthetic half-court possessions with team-specific play styles.
//!
//! Players hold spots on an arc around the basket (lane angles and formation
//! spread), drift around them at a team-specific speed, and the ball cycles
//! through the team's motif library: out to a receiver and back, followed by
//! a pause. Every possession ends with a shot. Tracks are produced at 25 Hz
//! and reduced to samples by [`extract_possessions`].

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    extract_possessions, AgentTrack, CoordBounds, DataError, Dataset, DatasetHeader,
    PossessionMark, PossessionSample, Task, TrackTable, POSSESSION_LENGTH,
};

pub const NATIVE_HZ: f64 = 25.0;
pub const PLAYERS: usize = 5;
const BASKET: (f64, f64) = (88.75, 25.0);

/// Ball trip to `receiver` and back, then a pause of `gap` native frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallMotif {
    pub receiver: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleProfile {
    pub name: String,
    /// Angle of each player's spot around the basket, 0 pointing to
    /// mid-court; player 0 handles the ball.
    pub lane_angles: [f64; PLAYERS],
    /// Distance of the spots from the basket, in feet.
    pub formation_spread: f64,
    /// Drift speed around the spot in ft/s, drawn per possession.
    pub speed_mean: f64,
    pub speed_std: f64,
    /// Native frames for one leg of a pass.
    pub pass_tempo: f64,
    /// Played in a loop, starting at a random point.
    pub motifs: Vec<BallMotif>,
}

impl StyleProfile {
    fn base(name: String, frac: f64) -> Self {
        let wing = 0.55 + 0.45 * frac;
        let corner = 1.25 + 0.25 * (1.0 - frac);
        Self {
            name,
            lane_angles: [0.0, wing, -wing, corner, -corner],
            formation_spread: 19.0 + 7.0 * frac,
            speed_mean: 3.0 + 5.0 * frac,
            speed_std: 0.5,
            pass_tempo: 6.0,
            motifs: Vec::new(),
        }
    }

    /// `n` profiles, each with its own spot layout and speed, and a common
    /// two-motif ball cycle.
    pub fn distinct(n: usize) -> Vec<Self> {
        (0..n)
            .map(|i| {
                let mut p = Self::base(format!("team{i:02}"), i as f64 / (n.max(2) - 1) as f64);
                p.motifs = two_motif_cycle(false);
                p
            })
            .collect()
    }

    /// `n` profiles in twins: twins share spots, speeds and motifs and differ
    /// only in which of their two ball trips is followed by the short pause,
    /// so telling them apart takes several seconds of context. Different
    /// twin pairs differ in layout and speed.
    pub fn league(n: usize) -> Vec<Self> {
        let pairs = n.div_ceil(2);
        (0..n)
            .map(|i| {
                let frac = (i / 2) as f64 / (pairs.max(2) - 1) as f64;
                let mut p = Self::base(format!("team{i:02}"), frac);
                p.motifs = two_motif_cycle(i % 2 == 1);
                p
            })
            .collect()
    }
}

fn two_motif_cycle(swapped: bool) -> Vec<BallMotif> {
    let (short, long) = (24.0, 60.0);
    let (a, b) = if swapped {
        (long, short)
    } else {
        (short, long)
    };
    vec![
        BallMotif {
            receiver: 1,
            gap: a,
        },
        BallMotif {
            receiver: 2,
            gap: b,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeamSynthConfig {
    pub per_team: usize,
    pub possessions_per_game: usize,
    /// Gaussian tracking jitter in feet.
    pub noise_std: f64,
    /// Native possession length range, in frames.
    pub min_native: usize,
    pub max_native: usize,
}

impl Default for TeamSynthConfig {
    fn default() -> Self {
        Self {
            per_team: 200,
            possessions_per_game: 20,
            noise_std: 0.2,
            min_native: 300,
            max_native: 800,
        }
    }
}

/// One synthetic game: all possessions of one team, at native rate. Agent 0
/// is the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossessionGame {
    pub table: TrackTable,
    pub marks: Vec<PossessionMark>,
}

struct Drift {
    amp: [[f64; 2]; 2],
    freq: [[f64; 2]; 2],
    phase: [[f64; 2]; 2],
}

impl Drift {
    fn new<R: Rng>(rng: &mut R, speed: f64) -> Self {
        let mut d = Drift {
            amp: [[0.0; 2]; 2],
            freq: [[0.0; 2]; 2],
            phase: [[0.0; 2]; 2],
        };
        for axis in 0..2 {
            for j in 0..2 {
                let f = rng.random_range(0.05..0.2);
                d.freq[axis][j] = f;
                d.amp[axis][j] = (0.5 * speed / (2.0 * PI * f)).min(6.0);
                d.phase[axis][j] = rng.random_range(0.0..2.0 * PI);
            }
        }
        d
    }

    fn at(&self, t: f64) -> (f64, f64) {
        let s = |axis: usize| -> f64 {
            (0..2)
                .map(|j| {
                    self.amp[axis][j]
                        * (2.0 * PI * self.freq[axis][j] * t + self.phase[axis][j]).sin()
                })
                .sum()
        };
        (s(0), s(1))
    }
}

fn lerp(a: (f64, f64), b: (f64, f64), u: f64) -> (f64, f64) {
    (a.0 + (b.0 - a.0) * u, a.1 + (b.1 - a.1) * u)
}

/// Native-rate `(ball, players)` paths for one possession.
fn possession_paths<R: Rng>(rng: &mut R, p: &StyleProfile, len: usize) -> Vec<Vec<(f64, f64)>> {
    let speed = Normal::new(p.speed_mean, p.speed_std)
        .expect("valid std")
        .sample(rng)
        .max(0.5);
    let homes: Vec<(f64, f64)> = p
        .lane_angles
        .iter()
        .map(|a| {
            (
                BASKET.0 - p.formation_spread * a.cos(),
                BASKET.1 + p.formation_spread * a.sin(),
            )
        })
        .collect();
    let drifts: Vec<Drift> = (0..PLAYERS).map(|_| Drift::new(rng, speed)).collect();
    let player = |i: usize, f: usize| {
        let d = drifts[i].at(f as f64 / NATIVE_HZ);
        (homes[i].0 + d.0, homes[i].1 + d.1)
    };

    // ball schedule: (frame, holder) segments produced by cycling the motifs
    let leg = p.pass_tempo.round().max(1.0) as usize;
    let hold = leg;
    let mut motif = rng.random_range(0..p.motifs.len().max(1));
    let mut f = 0i64 - rng.random_range(0..200);
    let shot_len = 20.min(len);
    let shot_start = len - shot_len;
    let mut ball = vec![(0.0, 0.0); len];
    let mut set = |f: i64, pos: (f64, f64)| {
        if f >= 0 && (f as usize) < shot_start {
            ball[f as usize] = pos;
        }
    };
    while f < shot_start as i64 {
        let Some(m) = p.motifs.get(motif) else {
            for g in f.max(0)..shot_start as i64 {
                set(g, player(0, g as usize));
            }
            break;
        };
        let r = m.receiver.min(PLAYERS - 1);
        let at = |g: i64| g.max(0) as usize;
        for k in 0..leg as i64 {
            let u = k as f64 / leg as f64;
            set(f + k, lerp(player(0, at(f + k)), player(r, at(f + k)), u));
        }
        f += leg as i64;
        for k in 0..hold as i64 {
            set(f + k, player(r, at(f + k)));
        }
        f += hold as i64;
        for k in 0..leg as i64 {
            let u = k as f64 / leg as f64;
            set(f + k, lerp(player(r, at(f + k)), player(0, at(f + k)), u));
        }
        f += leg as i64;
        let gap = (m.gap * rng.random_range(0.85..1.15)).round() as i64;
        for k in 0..gap {
            set(f + k, player(0, at(f + k)));
        }
        f += gap;
        motif = (motif + 1) % p.motifs.len();
    }
    let shooter = if shot_start > 0 {
        ball[shot_start - 1]
    } else {
        player(0, 0)
    };
    for k in 0..shot_len {
        ball[shot_start + k] = lerp(shooter, BASKET, (k + 1) as f64 / shot_len as f64);
    }

    let mut paths = vec![ball];
    for i in 0..PLAYERS {
        paths.push((0..len).map(|f| player(i, f)).collect());
    }
    paths
}

fn check_profiles(profiles: &[StyleProfile]) -> Result<(), DataError> {
    if profiles.len() < 2 {
        return Err(DataError::Invalid(
            "need at least two style profiles".into(),
        ));
    }
    for (i, p) in profiles.iter().enumerate() {
        if let Some(j) = profiles[..i].iter().position(|q| q == p) {
            return Err(DataError::Invalid(format!(
                "profiles {j} and {i} are identical"
            )));
        }
        if profiles[..i].iter().any(|q| q.name == p.name) {
            return Err(DataError::Invalid(format!(
                "duplicate profile name {:?}",
                p.name
            )));
        }
        let finite = p
            .lane_angles
            .iter()
            .chain([
                &p.formation_spread,
                &p.speed_mean,
                &p.speed_std,
                &p.pass_tempo,
            ])
            .all(|v| v.is_finite());
        if !finite
            || p.speed_std < 0.0
            || p.pass_tempo < 1.0
            || p.motifs.iter().any(|m| m.gap.is_nan() || m.gap < 0.0)
        {
            return Err(DataError::Invalid(format!(
                "profile {:?} has invalid parameters",
                p.name
            )));
        }
    }
    Ok(())
}

/// Native-rate games, `cfg.per_team / cfg.possessions_per_game` per team
/// (the last game of a team takes the remainder). Deterministic in `seed`.
pub fn generate_possession_tracks(
    seed: u64,
    profiles: &[StyleProfile],
    cfg: &TeamSynthConfig,
) -> Result<Vec<PossessionGame>, DataError> {
    check_profiles(profiles)?;
    if cfg.possessions_per_game == 0
        || cfg.min_native < 2
        || cfg.min_native > cfg.max_native
        || cfg.noise_std.is_nan()
        || cfg.noise_std < 0.0
    {
        return Err(DataError::Invalid("invalid team generator settings".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.noise_std.max(f64::MIN_POSITIVE)).expect("valid std");
    let mut games = Vec::new();
    for (team, profile) in profiles.iter().enumerate() {
        let mut left = cfg.per_team;
        while left > 0 {
            let n = left.min(cfg.possessions_per_game);
            left -= n;
            let mut agents: Vec<Vec<Option<(f64, f64)>>> = vec![Vec::new(); PLAYERS + 1];
            let mut marks = Vec::with_capacity(n);
            for k in 0..n {
                let len = rng.random_range(cfg.min_native..=cfg.max_native);
                let start = agents[0].len();
                for (a, path) in possession_paths(&mut rng, profile, len)
                    .into_iter()
                    .enumerate()
                {
                    agents[a].extend(path.into_iter().map(|(x, y)| {
                        Some(if cfg.noise_std > 0.0 {
                            (x + noise.sample(&mut rng), y + noise.sample(&mut rng))
                        } else {
                            (x, y)
                        })
                    }));
                }
                marks.push(PossessionMark {
                    start,
                    end: start + len,
                    team,
                    players: (1..=PLAYERS).collect(),
                    possession: k as u32,
                });
                // dead time between possessions
                for a in &mut agents {
                    a.extend(std::iter::repeat_n(None, 25));
                }
            }
            games.push(PossessionGame {
                table: TrackTable {
                    game: 0,
                    agents: agents
                        .iter()
                        .map(|p| AgentTrack::from_positions(p))
                        .collect(),
                },
                marks,
            });
        }
    }
    // game ids carry no team information
    let mut ids: Vec<u32> = (0..games.len() as u32).collect();
    ids.shuffle(&mut rng);
    for (g, id) in games.iter_mut().zip(ids) {
        g.table.game = id;
    }
    games.sort_by_key(|g| g.table.game);
    Ok(games)
}

/// Balanced team-identification dataset: exactly `cfg.per_team`
/// possessions per profile, each 200 sampled frames over court coordinates.
pub fn generate_possessions(
    seed: u64,
    profiles: &[StyleProfile],
    cfg: &TeamSynthConfig,
) -> Result<Dataset<PossessionSample>, DataError> {
    let mut samples = Vec::with_capacity(profiles.len() * cfg.per_team);
    for g in generate_possession_tracks(seed, profiles, cfg)? {
        samples.extend(extract_possessions(&g.table, 0, &g.marks)?);
    }
    let header = DatasetHeader::new(
        Task::Team,
        PLAYERS,
        POSSESSION_LENGTH,
        CoordBounds::COURT,
        profiles.iter().map(|p| p.name.clone()).collect(),
    );
    Dataset::new(header, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(per_team: usize) -> TeamSynthConfig {
        TeamSynthConfig {
            per_team,
            ..Default::default()
        }
    }

    #[test]
    fn balanced_and_deterministic() {
        let profiles = StyleProfile::league(6);
        let a = generate_possessions(1, &profiles, &cfg(40)).unwrap();
        assert_eq!(a.len(), 240);
        assert_eq!(a.class_counts(), vec![40; 6]);
        assert!(a.samples.iter().all(|s| s.window() == POSSESSION_LENGTH));
        let b = generate_possessions(1, &profiles, &cfg(40)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_profiles_rejected() {
        let mut p = StyleProfile::league(3);
        p[2] = p[0].clone();
        assert!(generate_possessions(0, &p, &cfg(4)).is_err());
        assert!(generate_possessions(0, &p[..1], &cfg(4)).is_err());
    }

    #[test]
    fn games_hold_one_team() {
        let ds = generate_possessions(3, &StyleProfile::league(4), &cfg(30)).unwrap();
        let mut by_game = std::collections::BTreeMap::new();
        for s in &ds.samples {
            by_game
                .entry(s.meta.game)
                .or_insert_with(Vec::new)
                .push(s.team);
        }
        assert_eq!(by_game.len(), 8);
        for teams in by_game.values() {
            assert!(teams.iter().all(|t| *t == teams[0]));
        }
    }

    fn mean_speed(s: &PossessionSample) -> f64 {
        let mut sum = 0.0;
        let mut n = 0;
        for p in &s.players {
            for t in 1..p.len() {
                if let (Some(a), Some(b)) = (p.position(t - 1), p.position(t)) {
                    sum += (b.0 - a.0).hypot(b.1 - a.1);
                    n += 1;
                }
            }
        }
        sum / n as f64
    }

    #[test]
    fn mean_velocity_centroid_beats_chance() {
        let profiles = StyleProfile::distinct(2);
        let train = generate_possessions(10, &profiles, &cfg(60)).unwrap();
        let test = generate_possessions(11, &profiles, &cfg(60)).unwrap();
        let mut centroid = [0.0; 2];
        for s in &train.samples {
            centroid[s.team] += mean_speed(s) / 60.0;
        }
        let correct = test
            .samples
            .iter()
            .filter(|s| {
                let v = mean_speed(s);
                let guess = usize::from((v - centroid[1]).abs() < (v - centroid[0]).abs());
                guess == s.team
            })
            .count();
        assert!(correct as f64 / test.len() as f64 > 0.6, "{correct}/120");
    }
}
