//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! architecture = "stacked"   # or "shared_compare"
//! variant = "3conv"          # optional: Nconv[+Kfc], "7 5 5 3 3", base=32
//!
//! [train]
//! epochs = 20
//! batch_size = 32
//! optimizer = "sgd"         # or "adam" (momentum is ignored)
//! learning_rate = 0.01
//! momentum = 0.9
//! patience = 5
//!
//! [loss]
//! weights = [0.07, 0.6, 1.0, 0.4, 0.2, 0.7]
//!
//! [split]
//! train = 0.6
//! val = 0.2
//! test = 0.2
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::data::{DatasetHeader, Task};
use crate::models::{ModelSpec, SharedCompareConfig, StackedConfig, SweepVariant};
use crate::nn::{LayerSpec, LossWeights, OptimizerKind};
use crate::training::{SplitFractions, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    SharedCompare,
    Stacked,
}

impl Architecture {
    pub fn task(self) -> Task {
        match self {
            Architecture::SharedCompare => Task::Event,
            Architecture::Stacked => Task::Team,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub architecture: Architecture,
    /// Named stacked variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Stacked trunk layers (before flatten and the class layer).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared: Option<Vec<LayerSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<Vec<LayerSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_self_pair: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub includes_ball: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_bias: Option<bool>,
}

/// Optimiser and schedule settings; the run seed lives at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub momentum: f64,
    pub patience: Option<usize>,
    pub threads: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            batch_size: d.batch_size,
            optimizer: d.optimizer,
            learning_rate: d.learning_rate,
            momentum: d.momentum,
            patience: d.patience,
            threads: d.threads,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    /// Per-class weights; defaults to the event weights for the event task
    /// and uniform weights for teams.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Expected dataset shape; any field given must match the dataset header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub np: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub loss: LossSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitFractions>,
    #[serde(default)]
    pub data: DataSection,
}

impl RunConfig {
    pub fn new(architecture: Architecture, seed: u64) -> Self {
        Self {
            seed,
            model: ModelSection {
                architecture,
                variant: None,
                layers: None,
                shared: None,
                compare: None,
                include_self_pair: None,
                includes_ball: None,
                head_bias: None,
            },
            train: TrainSection::default(),
            loss: LossSection::default(),
            split: None,
            data: DataSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            optimizer: self.train.optimizer,
            learning_rate: self.train.learning_rate,
            momentum: self.train.momentum,
            patience: self.train.patience,
            seed: self.seed,
            threads: self.train.threads,
        }
    }

    pub fn split_fractions(&self) -> SplitFractions {
        self.split.unwrap_or(match self.model.architecture.task() {
            Task::Event => SplitFractions::EVENT,
            Task::Team => SplitFractions::TEAM,
        })
    }

    pub fn loss_weights(&self, classes: usize) -> Result<LossWeights, CliError> {
        let w = match (&self.loss.weights, self.model.architecture.task()) {
            (Some(w), _) => LossWeights::new(w.clone()),
            (None, Task::Event) if classes == 6 => Ok(LossWeights::event_defaults()),
            (None, _) => Ok(LossWeights::uniform(classes)),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        if w.len() != classes {
            return Err(CliError::Mismatch(format!(
                "{} loss weights configured for {classes} classes",
                w.len()
            )));
        }
        Ok(w)
    }

    /// Checks the config against a dataset header.
    pub fn check_dataset(&self, header: &DatasetHeader) -> Result<(), CliError> {
        let task = self.model.architecture.task();
        if header.task != task {
            return Err(CliError::Mismatch(format!(
                "{:?} model needs a {task} dataset, got {}",
                self.model.architecture, header.task
            )));
        }
        if let Some(c) = &self.data.classes {
            if c != &header.classes {
                return Err(CliError::Mismatch(format!(
                    "config classes {c:?} differ from dataset classes {:?}",
                    header.classes
                )));
            }
        }
        for (what, want, got) in [
            ("np", self.data.np, header.np),
            ("t", self.data.t, header.t),
        ] {
            if want.is_some_and(|w| w != got) {
                return Err(CliError::Mismatch(format!(
                    "config {what} = {} but dataset has {got}",
                    want.unwrap_or_default()
                )));
            }
        }
        Ok(())
    }

    /// The model spec for `header`, with the config's overrides applied.
    pub fn model_spec(&self, header: &DatasetHeader) -> Result<ModelSpec, CliError> {
        self.check_dataset(header)?;
        let m = &self.model;
        let spec = match m.architecture {
            Architecture::SharedCompare => {
                if m.variant.is_some() || m.layers.is_some() || m.includes_ball.is_some() {
                    return Err(CliError::Config(
                        "variant, layers and includes_ball apply to the stacked model only".into(),
                    ));
                }
                let d = SharedCompareConfig::default();
                ModelSpec::SharedCompare(SharedCompareConfig {
                    group_size: header.np,
                    window: header.t,
                    shared: m.shared.clone().unwrap_or(d.shared),
                    compare: m.compare.clone().unwrap_or(d.compare),
                    num_classes: header.classes.len(),
                    include_self_pair: m.include_self_pair.unwrap_or(false),
                    head_bias: m.head_bias.unwrap_or(false),
                    bounds: header.bounds,
                })
            }
            Architecture::Stacked => {
                if m.shared.is_some() || m.compare.is_some() || m.include_self_pair.is_some() {
                    return Err(CliError::Config(
                        "shared, compare and include_self_pair apply to the shared-compare model only".into(),
                    ));
                }
                let mut c = StackedConfig {
                    players: header.np,
                    window: header.t,
                    num_classes: header.classes.len(),
                    bounds: header.bounds,
                    ..StackedConfig::default()
                };
                if let Some(v) = &m.variant {
                    c = SweepVariant::parse(v)?.build(&c)?;
                }
                if let Some(layers) = &m.layers {
                    c.layers = layers.clone();
                }
                c.includes_ball = m.includes_ball.unwrap_or(true);
                c.head_bias = m.head_bias.unwrap_or(false);
                ModelSpec::Stacked(c)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}
