//! Samples, the dataset file format, preprocessing of raw tracks into event
//! windows and possessions, and synthetic data generators.

pub mod format;
pub mod preprocess;
mod sample;
pub mod synth_events;
pub mod synth_teams;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{
    load_dataset, save_dataset, Dataset, DatasetHeader, DatasetSample, LoadedDataset, Task,
    FORMAT_VERSION,
};
pub use preprocess::{
    extract_possessions, window_events, EventMark, PossessionMark, TrackTable, EVENT_SEPARATION,
    EVENT_WINDOW, POSSESSION_LENGTH,
};
pub use sample::{
    AgentTrack, CoordBounds, EventMeta, PossessionMeta, PossessionSample, TrajectorySample,
};
pub use synth_events::{
    generate_event_tracks, generate_events, ClassMix, EventClass, EventGame, EventSynthConfig,
    EVENT_CLASSES,
};
pub use synth_teams::{
    generate_possession_tracks, generate_possessions, BallMotif, PossessionGame, StyleProfile,
    TeamSynthConfig,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unwindowed tracks as fed to the preprocessing step, tagged by task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum RawTracks {
    Event {
        classes: Vec<String>,
        bounds: CoordBounds,
        games: Vec<EventGame>,
    },
    Team {
        classes: Vec<String>,
        bounds: CoordBounds,
        /// Agent index of the ball in every table.
        ball: usize,
        games: Vec<PossessionGame>,
    },
}

impl RawTracks {
    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| DataError::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<(), DataError> {
        let text = serde_json::to_string(self).map_err(|e| DataError::Invalid(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Windows events (`np` agents each) or extracts possessions.
    pub fn preprocess(&self, np: usize) -> Result<LoadedDataset, DataError> {
        match self {
            RawTracks::Event {
                classes,
                bounds,
                games,
            } => {
                let mut samples = Vec::new();
                for g in games {
                    g.table.validate()?;
                    samples.extend(window_events(&g.table, &g.events, np)?);
                }
                let header =
                    DatasetHeader::new(Task::Event, np, EVENT_WINDOW, *bounds, classes.clone());
                Ok(LoadedDataset::Events(Dataset::new(header, samples)?))
            }
            RawTracks::Team {
                classes,
                bounds,
                ball,
                games,
            } => {
                let mut samples = Vec::new();
                for g in games {
                    g.table.validate()?;
                    samples.extend(extract_possessions(&g.table, *ball, &g.marks)?);
                }
                let np = samples.first().map_or(np, |s| s.players.len());
                let header =
                    DatasetHeader::new(Task::Team, np, POSSESSION_LENGTH, *bounds, classes.clone());
                Ok(LoadedDataset::Possessions(Dataset::new(header, samples)?))
            }
        }
    }
}
