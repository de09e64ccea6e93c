//! Raw track tables to fixed-size samples: event windows and possessions.

use serde::{Deserialize, Serialize};

use super::{AgentTrack, DataError, EventMeta, PossessionMeta, PossessionSample, TrajectorySample};

/// Frames in an event window: 7 before the centre, the centre, 8 after.
pub const EVENT_WINDOW: usize = 16;
const FRAMES_BEFORE: i64 = 7;
/// Events whose centres are at most this many frames apart are both dropped.
pub const EVENT_SEPARATION: i64 = 15;
/// Sampled frames per possession.
pub const POSSESSION_LENGTH: usize = 200;

/// All agents of one game over a common frame axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackTable {
    pub game: u32,
    pub agents: Vec<AgentTrack>,
}

impl TrackTable {
    pub fn frames(&self) -> usize {
        self.agents.first().map_or(0, AgentTrack::len)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let n = self.frames();
        for (i, a) in self.agents.iter().enumerate() {
            a.validate(n)
                .map_err(|e| DataError::Invalid(format!("game {} agent {i}: {e}", self.game)))?;
        }
        Ok(())
    }

    /// Frames `start..start + len` of agent `a`; frames outside the table
    /// are absent.
    fn crop(&self, a: usize, start: i64, len: usize) -> AgentTrack {
        let src = &self.agents[a];
        let frames: Vec<_> = (0..len as i64)
            .map(|d| {
                let f = start + d;
                (f >= 0 && (f as usize) < src.len())
                    .then(|| src.position(f as usize))
                    .flatten()
            })
            .collect();
        AgentTrack::from_positions(&frames)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMark {
    pub center_frame: i64,
    /// Agent index in the track table.
    pub key: usize,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossessionMark {
    /// Native frame range `start..end`.
    pub start: usize,
    pub end: usize,
    pub team: usize,
    /// Agent indices of the offensive players.
    pub players: Vec<usize>,
    pub possession: u32,
}

/// Cuts a 16-frame window around every isolated event. The window holds the
/// key agent and the `np - 1` agents nearest to it at the centre frame, in
/// track-table order; missing agents and out-of-range frames are absent.
pub fn window_events(
    table: &TrackTable,
    events: &[EventMark],
    np: usize,
) -> Result<Vec<TrajectorySample>, DataError> {
    if np == 0 {
        return Err(DataError::Invalid("np must be positive".into()));
    }
    let centre = FRAMES_BEFORE as usize;
    let mut out = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let crowded = events
            .iter()
            .enumerate()
            .any(|(j, o)| j != i && (o.center_frame - ev.center_frame).abs() <= EVENT_SEPARATION);
        if crowded {
            continue;
        }
        if ev.key >= table.agents.len() {
            return Err(DataError::Invalid(format!(
                "event at frame {}: key agent {} not in table",
                ev.center_frame, ev.key
            )));
        }
        let start = ev.center_frame - FRAMES_BEFORE;
        let windows: Vec<AgentTrack> = (0..table.agents.len())
            .map(|a| table.crop(a, start, EVENT_WINDOW))
            .collect();
        let anchor = windows[ev.key].nearest_position(centre).ok_or_else(|| {
            DataError::Invalid(format!(
                "event at frame {}: key agent {} absent from its window",
                ev.center_frame, ev.key
            ))
        })?;
        let mut near: Vec<(f64, usize)> = windows
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != ev.key)
            .filter_map(|(a, w)| {
                w.nearest_position(centre)
                    .map(|p| ((p.0 - anchor.0).hypot(p.1 - anchor.1), a))
            })
            .collect();
        near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut chosen: Vec<usize> = near.iter().take(np - 1).map(|&(_, a)| a).collect();
        chosen.push(ev.key);
        chosen.sort_unstable();
        let key = chosen.iter().position(|&a| a == ev.key);
        let mut persons: Vec<AgentTrack> = chosen.iter().map(|&a| windows[a].clone()).collect();
        persons.resize(np, AgentTrack::absent(EVENT_WINDOW));
        out.push(TrajectorySample {
            persons,
            key,
            label: ev.label,
            meta: EventMeta {
                game: table.game,
                center_frame: ev.center_frame,
            },
        });
    }
    Ok(out)
}

/// Half-rate, fixed-length possessions: even native frames are kept, long
/// possessions keep their last 200 sampled frames and short ones are padded
/// with absent frames at the front.
pub fn extract_possessions(
    table: &TrackTable,
    ball: usize,
    marks: &[PossessionMark],
) -> Result<Vec<PossessionSample>, DataError> {
    let n_agents = table.agents.len();
    let frames = table.frames();
    marks
        .iter()
        .map(|m| {
            if m.end > frames || m.start > m.end {
                return Err(DataError::Invalid(format!(
                    "possession {} spans frames {}..{} outside the table's {frames}",
                    m.possession, m.start, m.end
                )));
            }
            if let Some(&bad) = m.players.iter().chain([&ball]).find(|&&a| a >= n_agents) {
                return Err(DataError::Invalid(format!(
                    "possession {} references agent {bad} not in table",
                    m.possession
                )));
            }
            let sampled: Vec<usize> = (m.start..m.end).filter(|f| f % 2 == 0).collect();
            if sampled.is_empty() {
                return Err(DataError::Invalid(format!(
                    "possession {} has zero frames",
                    m.possession
                )));
            }
            let kept = &sampled[sampled.len().saturating_sub(POSSESSION_LENGTH)..];
            let pad = POSSESSION_LENGTH - kept.len();
            let track = |a: usize| {
                let src = &table.agents[a];
                let mut frames = vec![None; pad];
                frames.extend(kept.iter().map(|&f| src.position(f)));
                AgentTrack::from_positions(&frames)
            };
            Ok(PossessionSample {
                ball: track(ball),
                players: m.players.iter().map(|&p| track(p)).collect(),
                team: m.team,
                meta: PossessionMeta {
                    game: table.game,
                    possession: m.possession,
                },
            })
        })
        .collect()
}
