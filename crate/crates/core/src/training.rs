//! Minibatch training with game-level splits, best-validation selection and
//! early stopping.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DatasetSample, PossessionSample, TrajectorySample};
use crate::eval::{EvalError, EvalReport, Prediction};
use crate::models::{ModelError, SharedCompareNet, StackedNet, TrajectoryModel};
use crate::nn::{GradBuffer, LossWeights, NnError, Optimizer, OptimizerKind};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("non-finite weights after epoch {epoch}, batch {batch}")]
    NonFiniteWeights { epoch: usize, batch: usize },
    #[error("invalid training setup: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Fractions of games assigned to train, validation and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    /// 4 / 2 / 2 games out of 8.
    pub const EVENT: SplitFractions = SplitFractions {
        train: 0.5,
        val: 0.25,
        test: 0.25,
    };
    /// 60% / 20% / 20%.
    pub const TEAM: SplitFractions = SplitFractions {
        train: 0.6,
        val: 0.2,
        test: 0.2,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_games: Vec<u32>,
    pub val_games: Vec<u32>,
    pub test_games: Vec<u32>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn check_fractions(f: SplitFractions) -> Result<(), TrainError> {
    if [f.train, f.val, f.test]
        .iter()
        .any(|v| !(v.is_finite() && *v >= 0.0))
        || f.train <= 0.0
    {
        return Err(TrainError::Config(format!("invalid split fractions {f:?}")));
    }
    Ok(())
}

/// Shuffles `games` and cuts it into train / val / test counts. With three
/// or more games, a part with a positive fraction gets at least one game.
fn cut_games(
    mut games: Vec<u32>,
    f: SplitFractions,
    rng: &mut ChaCha8Rng,
) -> Result<[Vec<u32>; 3], TrainError> {
    games.shuffle(rng);
    let total = f.train + f.val + f.test;
    let g = games.len();
    let mut n_val = (f.val / total * g as f64).round() as usize;
    let mut n_test = (f.test / total * g as f64).round() as usize;
    if f.val > 0.0 && n_val == 0 && g >= 3 {
        n_val = 1;
    }
    if f.test > 0.0 && n_test == 0 && g >= 3 {
        n_test = 1;
    }
    if n_val + n_test >= g {
        return Err(TrainError::Config(format!(
            "{g} games are too few to split {f:?}"
        )));
    }
    let n_train = g - n_val - n_test;
    let test = games.split_off(n_train + n_val);
    let val = games.split_off(n_train);
    Ok([games, val, test])
}

fn assemble<S: DatasetSample>(samples: &[S], parts: [Vec<u32>; 3]) -> Split {
    let [mut train_games, mut val_games, mut test_games] = parts;
    train_games.sort_unstable();
    val_games.sort_unstable();
    test_games.sort_unstable();
    let pick = |set: &[u32]| -> Vec<usize> {
        (0..samples.len())
            .filter(|&i| set.binary_search(&samples[i].game()).is_ok())
            .collect()
    };
    Split {
        train: pick(&train_games),
        val: pick(&val_games),
        test: pick(&test_games),
        train_games,
        val_games,
        test_games,
    }
}

/// Assigns whole games to the three parts at random (seeded); sample
/// indices keep dataset order within each part.
pub fn split_by_game<S: DatasetSample>(
    samples: &[S],
    fractions: SplitFractions,
    seed: u64,
) -> Result<Split, TrainError> {
    check_fractions(fractions)?;
    let mut games: Vec<u32> = samples.iter().map(DatasetSample::game).collect();
    games.sort_unstable();
    games.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = cut_games(games, fractions, &mut rng)?;
    Ok(assemble(samples, parts))
}

/// Like [`split_by_game`], but for datasets whose games each carry a single
/// label (one team per game): the games of every label are cut separately,
/// so each label appears in every part it has enough games for.
pub fn split_by_game_stratified<S: DatasetSample>(
    samples: &[S],
    fractions: SplitFractions,
    seed: u64,
) -> Result<Split, TrainError> {
    check_fractions(fractions)?;
    let mut label_of: BTreeMap<u32, usize> = BTreeMap::new();
    for s in samples {
        if *label_of.entry(s.game()).or_insert(s.label()) != s.label() {
            return Err(TrainError::Config(format!(
                "game {} mixes labels; cannot stratify",
                s.game()
            )));
        }
    }
    let mut by_label: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (&g, &l) in &label_of {
        by_label.entry(l).or_default().push(g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<u32>; 3] = Default::default();
    for games in by_label.into_values() {
        let [a, b, c] = if games.len() >= 3 {
            cut_games(games, fractions, &mut rng)?
        } else {
            [games, Vec::new(), Vec::new()]
        };
        parts[0].extend(a);
        parts[1].extend(b);
        parts[2].extend(c);
    }
    Ok(assemble(samples, parts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// SGD only.
    pub momentum: f64,
    /// Stop after this many epochs without a better validation score.
    pub patience: Option<usize>,
    pub seed: u64,
    /// Worker threads for gradient and prediction batches; 1 runs
    /// everything on the calling thread.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            optimizer: OptimizerKind::Sgd,
            learning_rate: 0.01,
            momentum: 0.9,
            patience: Some(5),
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_score: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// Epoch whose weights were kept (`None` if no validation set).
    pub best_epoch: Option<usize>,
    pub best_score: Option<f64>,
    pub stopped_early: bool,
}

fn pool(threads: usize) -> Result<Option<rayon::ThreadPool>, TrainError> {
    if threads <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| TrainError::Config(e.to_string()))
}

/// Summed loss and gradient over `batch`. With several threads the batch is
/// cut into one contiguous chunk per thread and the partial sums are added
/// in chunk order, so the result depends only on the thread count.
fn batch_gradient<M: TrajectoryModel>(
    model: &M,
    batch: &[&M::Sample],
    weights: &LossWeights,
    grads: &mut GradBuffer,
    pool: Option<&rayon::ThreadPool>,
) -> Result<f64, ModelError> {
    match pool {
        None => {
            let mut loss = 0.0;
            for s in batch {
                loss += model.loss_and_grad(s, weights, grads)?;
            }
            Ok(loss)
        }
        Some(pool) => {
            let chunk = batch.len().div_ceil(pool.current_num_threads()).max(1);
            let parts: Vec<Result<(f64, GradBuffer), ModelError>> = pool.install(|| {
                batch
                    .par_chunks(chunk)
                    .map(|c| {
                        let mut g = GradBuffer::zeros_like(model.params());
                        let mut loss = 0.0;
                        for s in c {
                            loss += model.loss_and_grad(s, weights, &mut g)?;
                        }
                        Ok((loss, g))
                    })
                    .collect()
            });
            let mut loss = 0.0;
            for p in parts {
                let (l, g) = p?;
                loss += l;
                grads.accumulate(&g);
            }
            Ok(loss)
        }
    }
}

/// One optimizer step on the mean loss of `batch`; returns that mean.
fn train_step<M: TrajectoryModel>(
    model: &mut M,
    opt: &mut Optimizer,
    batch: &[&M::Sample],
    weights: &LossWeights,
    grads: &mut GradBuffer,
    pool: Option<&rayon::ThreadPool>,
) -> Result<f64, ModelError> {
    grads.zero();
    let loss = batch_gradient(model, batch, weights, grads, pool)? / batch.len() as f64;
    grads.scale(1.0 / batch.len() as f64);
    std::mem::swap(model.params_mut().grads_mut(), grads);
    opt.step(model.params_mut());
    std::mem::swap(model.params_mut().grads_mut(), grads);
    Ok(loss)
}

/// Trains `model` in place. After every epoch `validate` scores the model on
/// `val` (higher is better); the best-scoring weights are restored at the
/// end. Aborts on a non-finite loss or weights.
pub fn train<M, F>(
    model: &mut M,
    train: &[M::Sample],
    val: &[M::Sample],
    weights: &LossWeights,
    cfg: &TrainConfig,
    mut validate: F,
) -> Result<TrainOutcome, TrainError>
where
    M: TrajectoryModel,
    F: FnMut(&M, &[M::Sample]) -> Result<f64, TrainError>,
{
    if train.is_empty() || cfg.batch_size == 0 {
        return Err(TrainError::Config(
            "empty training set or zero batch size".into(),
        ));
    }
    if weights.len() != model.num_classes() {
        return Err(TrainError::Config(format!(
            "{} loss weights for {} classes",
            weights.len(),
            model.num_classes()
        )));
    }
    let pool = pool(cfg.threads)?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.momentum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grads = GradBuffer::zeros_like(model.params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut outcome = TrainOutcome {
        history: Vec::new(),
        best_epoch: None,
        best_score: None,
        stopped_early: false,
    };
    let mut best_values: Option<Vec<Vec<f64>>> = None;
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&M::Sample> = idx.iter().map(|&i| &train[i]).collect();
            let loss = train_step(model, &mut opt, &batch, weights, &mut grads, pool.as_ref())?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            if !model.params().is_finite() {
                return Err(TrainError::NonFiniteWeights { epoch, batch: b });
            }
            loss_sum += loss * idx.len() as f64;
        }
        let train_loss = loss_sum / train.len() as f64;
        let val_score = if val.is_empty() {
            None
        } else {
            Some(validate(model, val)?)
        };
        log::info!(
            "epoch {epoch}: train loss {train_loss:.5}{}",
            val_score.map_or(String::new(), |v| format!(", validation {v:.4}"))
        );
        outcome.history.push(EpochRecord {
            epoch,
            train_loss,
            val_score,
            seconds: started.elapsed().as_secs_f64(),
        });
        if let Some(score) = val_score {
            if outcome.best_score.is_none_or(|b| score > b) {
                outcome.best_score = Some(score);
                outcome.best_epoch = Some(epoch);
                best_values = Some(
                    model
                        .params()
                        .params()
                        .iter()
                        .map(|p| p.values.clone())
                        .collect(),
                );
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience.is_some_and(|p| since_best >= p) {
                    outcome.stopped_early = true;
                    break;
                }
            }
        }
    }
    if let Some(values) = best_values {
        model
            .params_mut()
            .load_values(values)
            .map_err(TrainError::Config)?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverfitOutcome {
    /// Loss before each step.
    pub losses: Vec<f64>,
    /// Steps taken until the loss fell below the target, if it did.
    pub reached_at: Option<usize>,
}

/// Full-batch training on a fixed set of samples until the mean loss drops below
/// `target` or `max_steps` steps have been taken.
pub fn overfit<M: TrajectoryModel>(
    model: &mut M,
    samples: &[M::Sample],
    weights: &LossWeights,
    cfg: &TrainConfig,
    max_steps: usize,
    target: f64,
) -> Result<OverfitOutcome, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::Config("no samples to overfit".into()));
    }
    let pool = pool(cfg.threads)?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.momentum)?;
    let mut grads = GradBuffer::zeros_like(model.params());
    let batch: Vec<&M::Sample> = samples.iter().collect();
    let mut losses = Vec::new();
    for step in 0..=max_steps {
        grads.zero();
        let loss =
            batch_gradient(model, &batch, weights, &mut grads, pool.as_ref())? / batch.len() as f64;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                epoch: 0,
                batch: step,
            });
        }
        losses.push(loss);
        if loss < target {
            return Ok(OverfitOutcome {
                losses,
                reached_at: Some(step),
            });
        }
        if step == max_steps {
            break;
        }
        grads.scale(1.0 / batch.len() as f64);
        std::mem::swap(model.params_mut().grads_mut(), &mut grads);
        opt.step(model.params_mut());
        std::mem::swap(model.params_mut().grads_mut(), &mut grads);
    }
    Ok(OverfitOutcome {
        losses,
        reached_at: None,
    })
}

/// `predict` over all samples, in sample order.
pub fn predictions<M, S, F>(
    model: &M,
    samples: &[S],
    threads: usize,
    predict: F,
) -> Result<Vec<Prediction>, TrainError>
where
    M: Sync,
    S: DatasetSample,
    F: Fn(&M, &S) -> Result<Vec<f64>, ModelError> + Sync,
{
    let one = |s: &S| -> Result<Prediction, ModelError> {
        Ok(Prediction {
            probs: predict(model, s)?,
            label: s.label(),
            game: s.game(),
        })
    };
    let out: Result<Vec<Prediction>, ModelError> = match pool(threads)? {
        None => samples.iter().map(one).collect(),
        Some(p) => p.install(|| samples.par_iter().map(one).collect()),
    };
    Ok(out?)
}

/// Whether the event evaluator is told which agent performs the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyRegime {
    Known,
    Unknown,
}

impl KeyRegime {
    pub fn name(self) -> &'static str {
        match self {
            KeyRegime::Known => "known_key",
            KeyRegime::Unknown => "unknown_key",
        }
    }
}

pub fn evaluate_events(
    net: &SharedCompareNet,
    samples: &[TrajectorySample],
    classes: &[String],
    regime: KeyRegime,
    threads: usize,
) -> Result<EvalReport, TrainError> {
    let preds = predictions(net, samples, threads, |m, s| match regime {
        KeyRegime::Known => m.predict_known_key(s),
        KeyRegime::Unknown => m.predict_unknown_key(s),
    })?;
    Ok(EvalReport::from_predictions(
        regime.name(),
        classes,
        &preds,
        &[2, 3],
        false,
    )?)
}

pub fn evaluate_teams(
    net: &StackedNet,
    samples: &[PossessionSample],
    classes: &[String],
    threads: usize,
) -> Result<EvalReport, TrainError> {
    let preds = predictions(net, samples, threads, |m, s| m.forward(s))?;
    Ok(EvalReport::from_predictions(
        "team",
        classes,
        &preds,
        &[2, 3],
        true,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_events, EventSynthConfig};

    #[test]
    fn split_keeps_games_whole() {
        let ds = generate_events(
            0,
            &EventSynthConfig {
                samples: 80,
                games: 8,
                ..Default::default()
            },
        )
        .unwrap();
        let s = split_by_game(&ds.samples, SplitFractions::EVENT, 3).unwrap();
        assert_eq!(
            (s.train_games.len(), s.val_games.len(), s.test_games.len()),
            (4, 2, 2)
        );
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 80);
        for &i in &s.test {
            assert!(s.test_games.contains(&ds.samples[i].meta.game));
        }
        assert_eq!(
            s,
            split_by_game(&ds.samples, SplitFractions::EVENT, 3).unwrap()
        );
        assert!(split_by_game(&ds.samples[..10], SplitFractions::EVENT, 0).is_ok());
    }

    #[test]
    fn team_split_is_60_20_20() {
        use crate::data::{generate_possessions, StyleProfile, TeamSynthConfig};
        let ds = generate_possessions(
            1,
            &StyleProfile::league(5),
            &TeamSynthConfig {
                per_team: 40,
                ..Default::default()
            },
        )
        .unwrap();
        let s = split_by_game(&ds.samples, SplitFractions::TEAM, 0).unwrap();
        assert_eq!(
            (s.train_games.len(), s.val_games.len(), s.test_games.len()),
            (6, 2, 2)
        );
    }

    #[test]
    fn stratified_split_covers_every_team() {
        use crate::data::{generate_possessions, StyleProfile, TeamSynthConfig};
        let ds = generate_possessions(
            2,
            &StyleProfile::league(4),
            &TeamSynthConfig {
                per_team: 100,
                ..Default::default()
            },
        )
        .unwrap();
        let s = split_by_game_stratified(&ds.samples, SplitFractions::TEAM, 0).unwrap();
        assert_eq!(
            (s.train_games.len(), s.val_games.len(), s.test_games.len()),
            (12, 4, 4)
        );
        for part in [&s.train, &s.val, &s.test] {
            let mut labels: Vec<usize> = part.iter().map(|&i| ds.samples[i].label()).collect();
            labels.dedup();
            labels.sort_unstable();
            labels.dedup();
            assert_eq!(labels, vec![0, 1, 2, 3]);
        }
        let events = generate_events(
            0,
            &EventSynthConfig {
                samples: 80,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(split_by_game_stratified(&events.samples, SplitFractions::EVENT, 0).is_err());
    }
}
