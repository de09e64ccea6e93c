//! Command-line pipeline: generate, preprocess, train, eval, predict, sweep.
//!
//! Every command is also a library function taking its clap argument struct,
//! so the pipeline can be driven from tests and examples.

pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{Architecture, DataSection, LossSection, ModelSection, RunConfig, TrainSection};

use crate::data::{
    generate_event_tracks, generate_events, generate_possession_tracks, generate_possessions,
    load_dataset, ClassMix, CoordBounds, DataError, Dataset, DatasetHeader, DatasetSample,
    EventSynthConfig, LoadedDataset, PossessionSample, RawTracks, StyleProfile, Task,
    TeamSynthConfig, TrajectorySample, EVENT_CLASSES,
};
use crate::eval::{EvalError, EvalReport};
use crate::models::{
    ModelError, ModelSpec, SharedCompareNet, StackedNet, TrajectoryModel, BASE_FILTER_VARIANTS,
    DEPTH_VARIANTS, FILTER_SIZE_VARIANTS,
};
use crate::nn::{Checkpoint, LossWeights, NnError};
use crate::training::{
    overfit, predictions, split_by_game, split_by_game_stratified, train, KeyRegime,
    OverfitOutcome, Split, TrainConfig, TrainError, TrainOutcome,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Checkpoint(#[from] NnError),
}

impl CliError {
    /// Machine-readable error class, printed as `error[class]: message`.
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Mismatch(_) => "mismatch",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
            CliError::Model(_) => "model",
            CliError::Train(
                TrainError::NonFiniteLoss { .. } | TrainError::NonFiniteWeights { .. },
            ) => "non_finite",
            CliError::Train(_) => "train",
            CliError::Eval(_) => "eval",
            CliError::Checkpoint(_) => "checkpoint",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            "mismatch" => 3,
            "io" => 4,
            "data" => 5,
            "model" => 6,
            "non_finite" => 7,
            "train" => 8,
            "eval" => 9,
            _ => 10,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serialises");
    text.push('\n');
    write_file(path, text)
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `<path>.manifest.json`
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Debug, Parser)]
#[command(
    name = "trajnet",
    version,
    about = "Temporal convolutional networks over multi-agent trajectories"
)]
pub struct Cli {
    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (or raw tracks with --raw).
    Generate(GenerateArgs),
    /// Window raw event tracks or extract possessions into a dataset.
    Preprocess(PreprocessArgs),
    /// Train a model; writes a run directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint and write reports.
    Eval(EvalArgs),
    /// Write per-sample class probabilities as JSON lines.
    Predict(PredictArgs),
    /// Train a set of stacked-net variants and tabulate their metrics.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskArg {
    Event,
    Team,
}

/// Which synthetic team profiles to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSet {
    /// Twin teams that differ only in the order of their passing motifs.
    League,
    /// Every team with its own layout and speed.
    Distinct,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Event samples.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Event games.
    #[arg(long, default_value_t = 8)]
    pub games: u32,
    /// Class proportions, e.g. `pass=0.5,shot=0.1`; unnamed classes share the rest.
    #[arg(long)]
    pub mix: Option<String>,
    /// Position jitter in feet.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub teams: usize,
    #[arg(long, value_enum, default_value_t = ProfileSet::League)]
    pub profiles: ProfileSet,
    #[arg(long, default_value_t = 200)]
    pub per_team: usize,
    #[arg(long, default_value_t = 20)]
    pub per_game: usize,
    /// Write unwindowed tracks for `preprocess` instead of a dataset.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

impl GenerateArgs {
    pub fn new(task: TaskArg, seed: u64, out: impl Into<PathBuf>) -> Self {
        Self {
            task,
            seed,
            samples: 1000,
            games: 8,
            mix: None,
            noise: None,
            teams: 6,
            profiles: ProfileSet::League,
            per_team: 200,
            per_game: 20,
            raw: false,
            out: out.into(),
        }
    }

    pub fn event_config(&self) -> Result<EventSynthConfig, CliError> {
        let mut cfg = EventSynthConfig {
            samples: self.samples,
            games: self.games,
            ..EventSynthConfig::default()
        };
        if let Some(m) = &self.mix {
            cfg.mix = ClassMix::parse(m)?;
        }
        if let Some(n) = self.noise {
            cfg.noise_std = n;
        }
        Ok(cfg)
    }

    pub fn team_config(&self) -> TeamSynthConfig {
        let mut cfg = TeamSynthConfig {
            per_team: self.per_team,
            possessions_per_game: self.per_game,
            ..TeamSynthConfig::default()
        };
        if let Some(n) = self.noise {
            cfg.noise_std = n;
        }
        cfg
    }

    pub fn profiles(&self) -> Vec<StyleProfile> {
        match self.profiles {
            ProfileSet::League => StyleProfile::league(self.teams),
            ProfileSet::Distinct => StyleProfile::distinct(self.teams),
        }
    }
}

/// Written next to every generated or preprocessed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileManifest {
    pub command: String,
    pub seed: Option<u64>,
    pub settings: serde_json::Value,
    pub output: PathBuf,
    pub sha256: String,
    pub samples: Option<usize>,
    pub source: Option<(PathBuf, String)>,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<FileManifest, CliError> {
    let out = &args.out;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let (settings, samples) = match args.task {
        TaskArg::Event => {
            let cfg = args.event_config()?;
            let n = if args.raw {
                let games = generate_event_tracks(args.seed, &cfg)?;
                RawTracks::Event {
                    classes: EVENT_CLASSES.iter().map(|c| c.name().to_string()).collect(),
                    bounds: CoordBounds::RINK,
                    games,
                }
                .write(out)?;
                None
            } else {
                let ds = generate_events(args.seed, &cfg)?;
                ds.save(out)?;
                Some(ds.len())
            };
            (serde_json::to_value(&cfg).expect("serialises"), n)
        }
        TaskArg::Team => {
            let cfg = args.team_config();
            let profiles = args.profiles();
            let n = if args.raw {
                let games = generate_possession_tracks(args.seed, &profiles, &cfg)?;
                RawTracks::Team {
                    classes: profiles.iter().map(|p| p.name.clone()).collect(),
                    bounds: CoordBounds::COURT,
                    ball: 0,
                    games,
                }
                .write(out)?;
                None
            } else {
                let ds = generate_possessions(args.seed, &profiles, &cfg)?;
                ds.save(out)?;
                Some(ds.len())
            };
            (
                serde_json::json!({ "generator": cfg, "profiles": profiles }),
                n,
            )
        }
    };
    let manifest = FileManifest {
        command: if args.raw {
            "generate --raw"
        } else {
            "generate"
        }
        .into(),
        seed: Some(args.seed),
        settings,
        output: out.clone(),
        sha256: file_sha256(out)?,
        samples,
        source: None,
    };
    write_json(&manifest_path(out), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PreprocessArgs {
    /// Raw tracks written by `generate --raw`.
    #[arg(long)]
    pub tracks: PathBuf,
    /// Agents per event window.
    #[arg(long, default_value_t = 5)]
    pub np: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

pub fn cmd_preprocess(args: &PreprocessArgs) -> Result<FileManifest, CliError> {
    let raw = RawTracks::read(&args.tracks)?;
    let ds = raw.preprocess(args.np)?;
    ds.save(&args.out)?;
    let manifest = FileManifest {
        command: "preprocess".into(),
        seed: None,
        settings: serde_json::json!({ "np": args.np }),
        output: args.out.clone(),
        sha256: file_sha256(&args.out)?,
        samples: Some(ds.len()),
        source: Some((args.tracks.clone(), file_sha256(&args.tracks)?)),
    };
    write_json(&manifest_path(&args.out), &manifest)?;
    Ok(manifest)
}

/// The games of each split, stored with the checkpoint so evaluation can
/// select the same samples later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitGames {
    pub train: Vec<u32>,
    pub val: Vec<u32>,
    pub test: Vec<u32>,
}

impl From<&Split> for SplitGames {
    fn from(s: &Split) -> Self {
        Self {
            train: s.train_games.clone(),
            val: s.val_games.clone(),
            test: s.test_games.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub task: Task,
    pub model: ModelSpec,
    pub classes: Vec<String>,
    pub seed: u64,
    pub dataset_sha256: String,
    pub split: SplitGames,
    pub best_epoch: Option<usize>,
    pub best_score: Option<f64>,
}

pub type ModelCheckpoint = Checkpoint<CheckpointHeader>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub seed: u64,
    pub dataset: PathBuf,
    pub dataset_sha256: String,
    pub checkpoint: PathBuf,
    pub split: SplitGames,
    pub split_sizes: (usize, usize, usize),
    pub params: usize,
    pub history: Vec<crate::training::EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_score: Option<f64>,
    pub stopped_early: bool,
    pub overfit: Option<OverfitOutcome>,
    pub reports: Vec<PathBuf>,
    pub started_at: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Root under which the run directory `<timestamp>-s<seed>` is created.
    #[arg(long, short, default_value = "runs")]
    pub out: PathBuf,
    /// Sanity mode: fit the first N training samples (up to 500 full-batch
    /// steps, stopping at loss < 0.01) instead of the full schedule.
    #[arg(long)]
    pub overfit: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use this run directory name instead of the timestamped one.
    #[arg(long)]
    pub name: Option<String>,
}

impl TrainArgs {
    pub fn new(
        config: impl Into<PathBuf>,
        data: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
    ) -> Self {
        Self {
            config: config.into(),
            data: data.into(),
            out: out.into(),
            overfit: None,
            threads: None,
            epochs: None,
            seed: None,
            name: None,
        }
    }

    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(t) = self.threads {
            cfg.train.threads = t;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

pub const OVERFIT_STEPS: usize = 500;
pub const OVERFIT_TARGET: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub reports: Vec<EvalReport>,
}

fn unique_dir(root: &Path, name: &str) -> PathBuf {
    let mut dir = root.join(name);
    let mut n = 2;
    while dir.exists() {
        dir = root.join(format!("{name}-{n}"));
        n += 1;
    }
    dir
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainRun, CliError> {
    let mut cfg = RunConfig::read(&args.config)?;
    args.apply(&mut cfg);
    let data = load_dataset(&args.data)?;
    let sha = file_sha256(&args.data)?;
    let name = args.name.clone().unwrap_or_else(|| {
        format!(
            "{}-s{}",
            chrono::Local::now().format("%Y%m%d-%H%M%S"),
            cfg.seed
        )
    });
    let dir = unique_dir(&args.out, &name);
    train_run(&cfg, &data, &args.data, &sha, &dir, args.overfit)
}

/// Everything produced by one fit, before it is written out.
struct Fitted {
    split: Split,
    outcome: TrainOutcome,
    overfit: Option<OverfitOutcome>,
    reports: Vec<EvalReport>,
}

fn select<S: Clone>(samples: &[S], idx: &[usize]) -> Vec<S> {
    idx.iter().map(|&i| samples[i].clone()).collect()
}

fn fit<M>(
    net: &mut M,
    ds: &Dataset<M::Sample>,
    cfg: &RunConfig,
    weights: &LossWeights,
    overfit_n: Option<usize>,
    score: impl Fn(&M, &[M::Sample], usize) -> Result<f64, TrainError>,
    evaluate: impl Fn(&M, &[M::Sample], usize) -> Result<Vec<EvalReport>, TrainError>,
) -> Result<Fitted, CliError>
where
    M: TrajectoryModel,
    M::Sample: DatasetSample + Clone,
{
    let tc: TrainConfig = cfg.train_config();
    // One team per game: cut each team's games separately so every team is
    // seen in training, validation and test.
    let split = match ds.header.task {
        Task::Event => split_by_game(&ds.samples, cfg.split_fractions(), cfg.seed)?,
        Task::Team => split_by_game_stratified(&ds.samples, cfg.split_fractions(), cfg.seed)?,
    };
    let train_set = select(&ds.samples, &split.train);
    if let Some(n) = overfit_n {
        let batch = &train_set[..n.min(train_set.len())];
        let o = overfit(net, batch, weights, &tc, OVERFIT_STEPS, OVERFIT_TARGET)?;
        match o.reached_at {
            Some(s) => log::info!("overfit: loss < {OVERFIT_TARGET} after {s} steps"),
            None => log::warn!(
                "overfit: loss {:.4} after {OVERFIT_STEPS} steps",
                o.losses.last().copied().unwrap_or(f64::NAN)
            ),
        }
        let reports = evaluate(net, batch, tc.threads)?;
        let outcome = TrainOutcome {
            history: Vec::new(),
            best_epoch: None,
            best_score: None,
            stopped_early: false,
        };
        return Ok(Fitted {
            split,
            outcome,
            overfit: Some(o),
            reports,
        });
    }
    let val_set = select(&ds.samples, &split.val);
    let threads = tc.threads;
    let outcome = train(net, &train_set, &val_set, weights, &tc, |m, v| {
        score(m, v, threads)
    })?;
    let test_set = select(&ds.samples, &split.test);
    let reports = if test_set.is_empty() {
        log::warn!("no test games; reporting on validation");
        evaluate(net, &val_set, threads)?
    } else {
        evaluate(net, &test_set, threads)?
    };
    Ok(Fitted {
        split,
        outcome,
        overfit: None,
        reports,
    })
}

fn event_reports(
    net: &SharedCompareNet,
    samples: &[TrajectorySample],
    classes: &[String],
    regimes: &[KeyRegime],
    ks: &[usize],
    threads: usize,
) -> Result<Vec<EvalReport>, TrainError> {
    let mut out = Vec::new();
    for &r in regimes {
        let preds = predictions(net, samples, threads, |m, s| match r {
            KeyRegime::Known => m.predict_known_key(s),
            KeyRegime::Unknown => m.predict_unknown_key(s),
        })?;
        out.push(EvalReport::from_predictions(
            r.name(),
            classes,
            &preds,
            ks,
            false,
        )?);
    }
    Ok(out)
}

fn team_report(
    net: &StackedNet,
    samples: &[PossessionSample],
    classes: &[String],
    ks: &[usize],
    threads: usize,
) -> Result<EvalReport, TrainError> {
    let preds = predictions(net, samples, threads, |m, s| m.forward(s))?;
    Ok(EvalReport::from_predictions(
        "team", classes, &preds, ks, true,
    )?)
}

const DEFAULT_KS: [usize; 2] = [2, 3];

fn train_run(
    cfg: &RunConfig,
    data: &LoadedDataset,
    data_path: &Path,
    sha: &str,
    dir: &Path,
    overfit_n: Option<usize>,
) -> Result<TrainRun, CliError> {
    let started_at = chrono::Local::now().to_rfc3339();
    let clock = Instant::now();
    let header = data.header();
    let spec = cfg.model_spec(header)?;
    let weights = cfg.loss_weights(header.classes.len())?;
    let classes = header.classes.clone();
    let ks: Vec<usize> = DEFAULT_KS
        .into_iter()
        .filter(|&k| k <= classes.len())
        .collect();
    let (fitted, params) = match (data, &spec) {
        (LoadedDataset::Events(ds), ModelSpec::SharedCompare(c)) => {
            let mut net = SharedCompareNet::new(c.clone(), cfg.seed)?;
            let f = fit(
                &mut net,
                ds,
                cfg,
                &weights,
                overfit_n,
                |m, v, t| {
                    let r = event_reports(m, v, &classes, &[KeyRegime::Known], &[], t)?;
                    Ok(r[0].mean_average_precision.unwrap_or(0.0))
                },
                |m, s, t| {
                    event_reports(
                        m,
                        s,
                        &classes,
                        &[KeyRegime::Known, KeyRegime::Unknown],
                        &ks,
                        t,
                    )
                },
            )?;
            (f, net.params().clone())
        }
        (LoadedDataset::Possessions(ds), ModelSpec::Stacked(c)) => {
            let mut net = StackedNet::new(c.clone(), cfg.seed)?;
            let f = fit(
                &mut net,
                ds,
                cfg,
                &weights,
                overfit_n,
                |m, v, t| Ok(team_report(m, v, &classes, &[], t)?.accuracy),
                |m, s, t| Ok(vec![team_report(m, s, &classes, &ks, t)?]),
            )?;
            (f, net.params().clone())
        }
        _ => return Err(CliError::Mismatch("model and dataset tasks differ".into())),
    };
    if !params.is_finite() {
        return Err(TrainError::NonFiniteWeights { epoch: 0, batch: 0 }.into());
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let split = SplitGames::from(&fitted.split);
    let ckpt_path = dir.join("model.ckpt");
    let ckpt = ModelCheckpoint::from_params(
        CheckpointHeader {
            task: header.task,
            model: spec,
            classes,
            seed: cfg.seed,
            dataset_sha256: sha.to_string(),
            split: split.clone(),
            best_epoch: fitted.outcome.best_epoch,
            best_score: fitted.outcome.best_score,
        },
        &params,
    );
    ckpt.write(&ckpt_path)?;
    write_file(&dir.join("config.toml"), cfg.to_toml())?;
    let mut report_paths = Vec::new();
    for r in &fitted.reports {
        report_paths.extend(r.write(dir.join("eval"), &r.title)?);
    }
    for r in &fitted.reports {
        log::info!("{}", r.to_text());
    }
    let manifest = RunManifest {
        config: cfg.clone(),
        seed: cfg.seed,
        dataset: data_path.to_path_buf(),
        dataset_sha256: sha.to_string(),
        checkpoint: ckpt_path,
        split,
        split_sizes: (
            fitted.split.train.len(),
            fitted.split.val.len(),
            fitted.split.test.len(),
        ),
        params: params.num_scalars(),
        history: fitted.outcome.history,
        best_epoch: fitted.outcome.best_epoch,
        best_score: fitted.outcome.best_score,
        stopped_early: fitted.outcome.stopped_early,
        overfit: fitted.overfit,
        reports: report_paths,
        started_at,
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(TrainRun {
        dir: dir.to_path_buf(),
        manifest,
        reports: fitted.reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum RegimeArg {
    Known,
    Unknown,
    Both,
}

impl RegimeArg {
    fn regimes(self) -> Vec<KeyRegime> {
        match self {
            RegimeArg::Known => vec![KeyRegime::Known],
            RegimeArg::Unknown => vec![KeyRegime::Unknown],
            RegimeArg::Both => vec![KeyRegime::Known, KeyRegime::Unknown],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SplitArg {
    All,
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Key-agent regime for event models.
    #[arg(long, value_enum, default_value_t = RegimeArg::Both)]
    pub regime: RegimeArg,
    /// hit@k levels beyond k = 1.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
    pub k: Vec<usize>,
    /// Which games to evaluate; train/val/test use the split stored in the
    /// checkpoint and require the same dataset file.
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl EvalArgs {
    pub fn new(
        checkpoint: impl Into<PathBuf>,
        data: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
    ) -> Self {
        Self {
            checkpoint: checkpoint.into(),
            data: data.into(),
            regime: RegimeArg::Both,
            k: DEFAULT_KS.to_vec(),
            split: SplitArg::Test,
            out: out.into(),
            threads: 1,
        }
    }
}

enum LoadedModel {
    Events(SharedCompareNet),
    Teams(StackedNet),
}

fn load_model(path: &Path) -> Result<(CheckpointHeader, LoadedModel), CliError> {
    let ckpt = ModelCheckpoint::read(path)?;
    let h = ckpt.header.clone();
    let model = match &h.model {
        ModelSpec::SharedCompare(c) => {
            let mut net = SharedCompareNet::new(c.clone(), h.seed)?;
            ckpt.restore_into(net.params_mut())?;
            LoadedModel::Events(net)
        }
        ModelSpec::Stacked(c) => {
            let mut net = StackedNet::new(c.clone(), h.seed)?;
            ckpt.restore_into(net.params_mut())?;
            LoadedModel::Teams(net)
        }
    };
    Ok((h, model))
}

fn check_compatible(h: &CheckpointHeader, data: &DatasetHeader) -> Result<(), CliError> {
    if h.task != data.task {
        return Err(CliError::Mismatch(format!(
            "checkpoint is for the {} task but the dataset is {}",
            h.task, data.task
        )));
    }
    if h.classes != data.classes {
        return Err(CliError::Mismatch(format!(
            "checkpoint classes {:?} differ from dataset classes {:?}",
            h.classes, data.classes
        )));
    }
    Ok(())
}

fn games_of<'a>(
    h: &'a CheckpointHeader,
    split: SplitArg,
    sha: &str,
) -> Result<Option<&'a [u32]>, CliError> {
    if split != SplitArg::All && sha != h.dataset_sha256 {
        return Err(CliError::Mismatch(
            "the checkpoint's split refers to a different dataset file; use --split all".into(),
        ));
    }
    Ok(match split {
        SplitArg::All => None,
        SplitArg::Train => Some(&h.split.train),
        SplitArg::Val => Some(&h.split.val),
        SplitArg::Test => Some(&h.split.test),
    })
}

fn in_games<S: DatasetSample + Clone>(samples: &[S], games: Option<&[u32]>) -> Vec<S> {
    samples
        .iter()
        .filter(|s| games.is_none_or(|g| g.contains(&s.game())))
        .cloned()
        .collect()
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Vec<EvalReport>, CliError> {
    let (h, model) = load_model(&args.checkpoint)?;
    let data = load_dataset(&args.data)?;
    check_compatible(&h, data.header())?;
    let sha = file_sha256(&args.data)?;
    let games = games_of(&h, args.split, &sha)?;
    let reports = match (&model, &data) {
        (LoadedModel::Events(net), LoadedDataset::Events(ds)) => {
            let s = in_games(&ds.samples, games);
            event_reports(
                net,
                &s,
                &h.classes,
                &args.regime.regimes(),
                &args.k,
                args.threads,
            )?
        }
        (LoadedModel::Teams(net), LoadedDataset::Possessions(ds)) => {
            let s = in_games(&ds.samples, games);
            vec![team_report(net, &s, &h.classes, &args.k, args.threads)?]
        }
        _ => unreachable!("task checked above"),
    };
    for r in &reports {
        r.write(&args.out, &r.title)?;
    }
    Ok(reports)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Key-agent regime for event models.
    #[arg(long, value_enum, default_value_t = RegimeArg::Known)]
    pub regime: RegimeArg,
    /// JSON-lines output, one line per sample.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub index: usize,
    pub game: u32,
    pub label: String,
    pub predicted: String,
    pub probs: Vec<f64>,
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Vec<PredictionLine>, CliError> {
    let (h, model) = load_model(&args.checkpoint)?;
    let data = load_dataset(&args.data)?;
    check_compatible(&h, data.header())?;
    let preds = match (&model, &data) {
        (LoadedModel::Events(net), LoadedDataset::Events(ds)) => {
            let regime = match args.regime {
                RegimeArg::Known => KeyRegime::Known,
                RegimeArg::Unknown => KeyRegime::Unknown,
                RegimeArg::Both => return Err(CliError::Config("predict takes one regime".into())),
            };
            predictions(net, &ds.samples, args.threads, |m, s| match regime {
                KeyRegime::Known => m.predict_known_key(s),
                KeyRegime::Unknown => m.predict_unknown_key(s),
            })?
        }
        (LoadedModel::Teams(net), LoadedDataset::Possessions(ds)) => {
            predictions(net, &ds.samples, args.threads, |m, s| m.forward(s))?
        }
        _ => unreachable!("task checked above"),
    };
    let lines: Vec<PredictionLine> = preds
        .into_iter()
        .enumerate()
        .map(|(index, p)| PredictionLine {
            index,
            game: p.game,
            label: h.classes[p.label].clone(),
            predicted: h.classes[crate::eval::metrics::argmax(&p.probs)].clone(),
            probs: p.probs,
        })
        .collect();
    let mut text = Vec::new();
    for l in &lines {
        serde_json::to_writer(&mut text, l).expect("serialises");
        text.push(b'\n');
    }
    write_file(&args.out, text)?;
    Ok(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SweepSet {
    /// 2conv ... 5conv+2fc
    Depth,
    /// "3 3 3 2 2" ... "9 7 7 5 5"
    FilterSizes,
    /// base=16 ... base=128
    BaseFilters,
    All,
}

impl SweepSet {
    pub fn labels(self) -> Vec<String> {
        let depth = DEPTH_VARIANTS.iter().map(|s| s.to_string());
        let sizes = FILTER_SIZE_VARIANTS.iter().map(|s| s.to_string());
        let base = BASE_FILTER_VARIANTS.iter().map(|b| format!("base={b}"));
        match self {
            SweepSet::Depth => depth.collect(),
            SweepSet::FilterSizes => sizes.collect(),
            SweepSet::BaseFilters => base.collect(),
            SweepSet::All => depth.chain(sizes).chain(base).collect(),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Stacked-model run configuration used as the template.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SweepSet::All)]
    pub set: SweepSet,
    /// Explicit variant labels (`3conv`, `"7 5 5 3 3"`, `base=32`);
    /// overrides --set.
    #[arg(long)]
    pub variant: Vec<String>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SweepArgs {
    pub fn new(
        config: impl Into<PathBuf>,
        data: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
    ) -> Self {
        Self {
            config: config.into(),
            data: data.into(),
            set: SweepSet::All,
            variant: Vec::new(),
            out: out.into(),
            threads: None,
            epochs: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SweepStatus {
    Trained {
        dir: PathBuf,
    },
    /// Same layers as an earlier variant; its metrics are reused.
    SameAs {
        variant: String,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: String,
    pub status: SweepStatus,
    pub params: Option<usize>,
    pub acc: Option<f64>,
    pub hit2: Option<f64>,
    pub hit3: Option<f64>,
    pub game_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn row(&self, variant: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_text(&self) -> String {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        let mut s = format!(
            "{:<12} {:>9} {:>8} {:>8} {:>8} {:>9}  note\n",
            "variant", "params", "acc", "hit@2", "hit@3", "game acc"
        );
        for r in &self.rows {
            let note = match &r.status {
                SweepStatus::Trained { .. } => String::new(),
                SweepStatus::SameAs { variant } => format!("same layers as {variant}"),
                SweepStatus::Skipped { reason } => format!("skipped: {reason}"),
            };
            s += &format!(
                "{:<12} {:>9} {:>8} {:>8} {:>8} {:>9}  {note}\n",
                r.variant,
                r.params.map_or("-".into(), |p| p.to_string()),
                pct(r.acc),
                pct(r.hit2),
                pct(r.hit3),
                pct(r.game_acc)
            );
        }
        s
    }

    pub fn to_tsv(&self) -> String {
        let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
        let mut s = "variant\tacc\thit@2\thit@3\tgame_acc\n".to_string();
        for r in &self.rows {
            s += &format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.variant,
                f(r.acc),
                f(r.hit2),
                f(r.hit3),
                f(r.game_acc)
            );
        }
        s
    }
}

fn dir_label(variant: &str) -> String {
    variant
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '+' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepTable, CliError> {
    let mut template = RunConfig::read(&args.config)?;
    if template.model.architecture != Architecture::Stacked {
        return Err(CliError::Config(
            "sweeps vary the stacked architecture".into(),
        ));
    }
    if let Some(t) = args.threads {
        template.train.threads = t;
    }
    if let Some(e) = args.epochs {
        template.train.epochs = e;
    }
    if let Some(s) = args.seed {
        template.seed = s;
    }
    template.model.layers = None;
    let labels = if args.variant.is_empty() {
        args.set.labels()
    } else {
        args.variant.clone()
    };
    let data = load_dataset(&args.data)?;
    let sha = file_sha256(&args.data)?;
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut built: Vec<(ModelSpec, usize)> = Vec::new();
    for label in labels {
        let mut cfg = template.clone();
        cfg.model.variant = Some(label.clone());
        let spec = match cfg.model_spec(data.header()) {
            Ok(s) => s,
            Err(e @ (CliError::Model(_) | CliError::Config(_))) => {
                log::warn!("variant {label:?} skipped: {e}");
                rows.push(SweepRow {
                    variant: label,
                    status: SweepStatus::Skipped {
                        reason: e.to_string(),
                    },
                    params: None,
                    acc: None,
                    hit2: None,
                    hit3: None,
                    game_acc: None,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some(&(_, i)) = built.iter().find(|(s, _)| *s == spec) {
            let earlier = rows[i].clone();
            rows.push(SweepRow {
                variant: label,
                status: SweepStatus::SameAs {
                    variant: earlier.variant,
                },
                ..earlier
            });
            continue;
        }
        log::info!("sweep: training {label}");
        let run = train_run(
            &cfg,
            &data,
            &args.data,
            &sha,
            &args.out.join(dir_label(&label)),
            None,
        )?;
        let r = &run.reports[0];
        built.push((spec, rows.len()));
        rows.push(SweepRow {
            variant: label,
            status: SweepStatus::Trained {
                dir: run.dir.clone(),
            },
            params: Some(run.manifest.params),
            acc: Some(r.accuracy),
            hit2: r.hit_at(2),
            hit3: r.hit_at(3),
            game_acc: r.game_accuracy,
        });
    }
    let table = SweepTable { rows };
    write_file(&args.out.join("sweep.txt"), table.to_text())?;
    write_file(&args.out.join("sweep.tsv"), table.to_tsv())?;
    write_json(&args.out.join("sweep.json"), &table)?;
    Ok(table)
}

/// Parses `argv`, runs the command, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    let mut say = |s: String| {
        let _ = writeln!(stdout, "{s}");
    };
    match cmd {
        Command::Generate(a) => {
            let m = cmd_generate(a)?;
            say(format!(
                "wrote {} (sha256 {})",
                m.output.display(),
                m.sha256
            ));
        }
        Command::Preprocess(a) => {
            let m = cmd_preprocess(a)?;
            say(format!(
                "wrote {} samples to {}",
                m.samples.unwrap_or(0),
                m.output.display()
            ));
        }
        Command::Train(a) => {
            let run = cmd_train(a)?;
            for r in &run.reports {
                say(r.to_text());
            }
            say(format!("run directory {}", run.dir.display()));
        }
        Command::Eval(a) => {
            for r in cmd_eval(a)? {
                say(r.to_text());
            }
        }
        Command::Predict(a) => {
            let lines = cmd_predict(a)?;
            say(format!(
                "wrote {} predictions to {}",
                lines.len(),
                a.out.display()
            ));
        }
        Command::Sweep(a) => say(cmd_sweep(a)?.to_text()),
    }
    Ok(())
}
