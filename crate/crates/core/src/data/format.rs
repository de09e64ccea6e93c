//! Line-delimited JSON dataset files.
//!
//! Line 1 is the header; every following non-blank line is one sample.
//! Coordinates are written in shortest round-trip decimal form, so a
//! save/load cycle is bit-exact.
//!
//! ```text
//! {"format_version":1,"task":"event","np":5,"t":16,"bounds":{...},"classes":["pass",...]}
//! {"agents":[{"x":[...],"y":[...],"mask":[...]},...],"label":"shot","key":2,"game":0,"center_frame":412}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AgentTrack, CoordBounds, DataError, EventMeta, PossessionMeta, PossessionSample,
    TrajectorySample,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Event,
    Team,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Event => "event",
            Task::Team => "team",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub task: Task,
    pub np: usize,
    pub t: usize,
    pub bounds: CoordBounds,
    pub classes: Vec<String>,
}

impl DatasetHeader {
    pub fn new(task: Task, np: usize, t: usize, bounds: CoordBounds, classes: Vec<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            task,
            np,
            t,
            bounds,
            classes,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.format_version != FORMAT_VERSION {
            return Err(DataError::Invalid(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.np == 0 || self.t == 0 {
            return Err(DataError::Invalid("np and t must be positive".into()));
        }
        self.bounds.validate()?;
        if self.classes.is_empty() {
            return Err(DataError::Invalid("class list is empty".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].contains(c) {
                return Err(DataError::Invalid(format!("duplicate class label {c:?}")));
            }
        }
        Ok(())
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }
}

/// A sample type that can live in a dataset file.
pub trait DatasetSample: Clone + Send + Sync + Sized {
    const TASK: Task;

    fn label(&self) -> usize;
    fn game(&self) -> u32;
    fn validate(&self, header: &DatasetHeader) -> Result<(), String>;
    fn encode(&self, header: &DatasetHeader) -> Result<String, DataError>;
    fn decode(line: &str, header: &DatasetHeader) -> Result<Self, String>;
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    agents: Vec<AgentTrack>,
    label: String,
    #[serde(default)]
    key: Option<usize>,
    game: u32,
    center_frame: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PossessionRecord {
    ball: AgentTrack,
    agents: Vec<AgentTrack>,
    label: String,
    game: u32,
    possession: u32,
}

fn class_name(header: &DatasetHeader, label: usize) -> Result<String, DataError> {
    header
        .classes
        .get(label)
        .cloned()
        .ok_or_else(|| DataError::Invalid(format!("label {label} has no class name")))
}

fn class_id(header: &DatasetHeader, name: &str) -> Result<usize, String> {
    header
        .class_index(name)
        .ok_or_else(|| format!("unknown class label {name:?}"))
}

impl DatasetSample for TrajectorySample {
    const TASK: Task = Task::Event;

    fn label(&self) -> usize {
        self.label
    }

    fn game(&self) -> u32 {
        self.meta.game
    }

    fn validate(&self, header: &DatasetHeader) -> Result<(), String> {
        TrajectorySample::validate(self, header.np, header.t, header.classes.len())
    }

    fn encode(&self, header: &DatasetHeader) -> Result<String, DataError> {
        let rec = EventRecord {
            agents: self.persons.clone(),
            label: class_name(header, self.label)?,
            key: self.key,
            game: self.meta.game,
            center_frame: self.meta.center_frame,
        };
        serde_json::to_string(&rec).map_err(|e| DataError::Invalid(e.to_string()))
    }

    fn decode(line: &str, header: &DatasetHeader) -> Result<Self, String> {
        let rec: EventRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        Ok(TrajectorySample {
            persons: rec.agents,
            key: rec.key,
            label: class_id(header, &rec.label)?,
            meta: EventMeta {
                game: rec.game,
                center_frame: rec.center_frame,
            },
        })
    }
}

impl DatasetSample for PossessionSample {
    const TASK: Task = Task::Team;

    fn label(&self) -> usize {
        self.team
    }

    fn game(&self) -> u32 {
        self.meta.game
    }

    fn validate(&self, header: &DatasetHeader) -> Result<(), String> {
        PossessionSample::validate(self, header.np, header.t, header.classes.len())
    }

    fn encode(&self, header: &DatasetHeader) -> Result<String, DataError> {
        let rec = PossessionRecord {
            ball: self.ball.clone(),
            agents: self.players.clone(),
            label: class_name(header, self.team)?,
            game: self.meta.game,
            possession: self.meta.possession,
        };
        serde_json::to_string(&rec).map_err(|e| DataError::Invalid(e.to_string()))
    }

    fn decode(line: &str, header: &DatasetHeader) -> Result<Self, String> {
        let rec: PossessionRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        Ok(PossessionSample {
            ball: rec.ball,
            players: rec.agents,
            team: class_id(header, &rec.label)?,
            meta: PossessionMeta {
                game: rec.game,
                possession: rec.possession,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    pub header: DatasetHeader,
    pub samples: Vec<S>,
}

impl<S: DatasetSample> Dataset<S> {
    /// Validates the header and every sample against it.
    pub fn new(header: DatasetHeader, samples: Vec<S>) -> Result<Self, DataError> {
        header.validate()?;
        if header.task != S::TASK {
            return Err(DataError::Invalid(format!(
                "header declares task {} but samples are {}",
                header.task,
                S::TASK
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            s.validate(&header)
                .map_err(|e| DataError::Invalid(format!("sample {i}: {e}")))?;
        }
        Ok(Self { header, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.header.classes.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            header: self.header.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for s in &self.samples {
            counts[s.label()] += 1;
        }
        counts
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), DataError> {
        let header =
            serde_json::to_string(&self.header).map_err(|e| DataError::Invalid(e.to_string()))?;
        writeln!(w, "{header}")?;
        for s in &self.samples {
            writeln!(w, "{}", s.encode(&self.header)?)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    /// Reads a dataset of this sample type; a file declaring the other task
    /// is an error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let (header, lines) = read_header(BufReader::new(File::open(path)?))?;
        if header.task != S::TASK {
            return Err(DataError::Parse {
                line: 1,
                msg: format!("expected a {} dataset, found {}", S::TASK, header.task),
            });
        }
        parse_body(header, lines)
    }
}

type Lines<R> = std::iter::Enumerate<std::io::Lines<R>>;

fn read_header<R: BufRead>(reader: R) -> Result<(DatasetHeader, Lines<R>), DataError> {
    let mut lines = reader.lines().enumerate();
    let first = match lines.next() {
        Some((_, l)) => l?,
        None => {
            return Err(DataError::Parse {
                line: 1,
                msg: "missing header".into(),
            })
        }
    };
    let header: DatasetHeader = serde_json::from_str(&first).map_err(|e| DataError::Parse {
        line: 1,
        msg: format!("bad header: {e}"),
    })?;
    header.validate().map_err(|e| DataError::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    Ok((header, lines))
}

fn parse_body<S: DatasetSample, R: BufRead>(
    header: DatasetHeader,
    lines: Lines<R>,
) -> Result<Dataset<S>, DataError> {
    let mut samples = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| DataError::Parse { line: i + 1, msg };
        let s = S::decode(&line, &header).map_err(parse_err)?;
        s.validate(&header).map_err(parse_err)?;
        samples.push(s);
    }
    Ok(Dataset { header, samples })
}

/// A dataset of either task, as found on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedDataset {
    Events(Dataset<TrajectorySample>),
    Possessions(Dataset<PossessionSample>),
}

impl LoadedDataset {
    pub fn header(&self) -> &DatasetHeader {
        match self {
            LoadedDataset::Events(d) => &d.header,
            LoadedDataset::Possessions(d) => &d.header,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LoadedDataset::Events(d) => d.len(),
            LoadedDataset::Possessions(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        match self {
            LoadedDataset::Events(d) => d.save(path),
            LoadedDataset::Possessions(d) => d.save(path),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoadedDataset, DataError> {
    let (header, lines) = read_header(BufReader::new(File::open(path)?))?;
    Ok(match header.task {
        Task::Event => LoadedDataset::Events(parse_body(header, lines)?),
        Task::Team => LoadedDataset::Possessions(parse_body(header, lines)?),
    })
}

pub fn save_dataset(dataset: &LoadedDataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    dataset.save(path)
}
