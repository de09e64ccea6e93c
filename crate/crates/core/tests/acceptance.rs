//! Acceptance suite: one line per criterion, `PASS` or `FAIL`.
//!
//! Runs as a plain binary (`harness = false`) so the lines appear in order.
//! Pass criterion numbers to run a subset: `cargo test --test acceptance -- 1 7 8`.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajnet::cli::{
    cmd_generate, cmd_sweep, cmd_train, file_sha256, GenerateArgs, ProfileSet, SweepArgs,
    SweepStatus, TaskArg, TrainArgs,
};
use trajnet::data::{
    generate_events, generate_possessions, AgentTrack, EventSynthConfig, PossessionSample,
    StyleProfile, TeamSynthConfig, TrajectorySample,
};
use trajnet::eval::{
    average_precision, hit_at_k, metrics::argmax, pr_curve, pr_curve_area, EvalReport, Prediction,
};
use trajnet::models::{
    gradient_check, ModelError, SharedCompareConfig, SharedCompareNet, StackedConfig, StackedNet,
};
use trajnet::nn::{
    conv1d_forward, GradCheckConfig, GradCheckReport, LayerSpec, LossWeights, Network,
};
use trajnet::tensor::{FilterBank, SignalTensor};

type Outcome = Result<String, String>;
type Criterion<'a> = (usize, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- 1

fn oracle_conv(x: &SignalTensor, f: &FilterBank) -> Vec<f64> {
    let (n, len) = x.shape();
    let mut out = vec![0.0; f.out_channels() * len];
    for k in 0..f.out_channels() {
        for t in 0..len {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..f.width() {
                    let v = if t + j < len { x.get(i, t + j) } else { 0.0 };
                    s += v * f.get(i, j, k);
                }
            }
            out[k * len + t] = s;
        }
    }
    out
}

fn conv_oracle() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let (c, t, w, m) = (
            rng.random_range(1..=8),
            rng.random_range(1..=8),
            rng.random_range(1..=8),
            rng.random_range(1..=8),
        );
        let x = SignalTensor::from_vec(
            c,
            t,
            (0..c * t).map(|_| rng.random_range(-10.0..10.0)).collect(),
        )
        .map_err(e2s)?;
        let f = FilterBank::from_fn(c, w, m, |_, _, _| rng.random_range(-1.0..1.0)).map_err(e2s)?;
        let got = conv1d_forward(&x, &f, None).map_err(e2s)?;
        let want = oracle_conv(&x, &f);
        let same = got.values().len() == want.len()
            && got
                .values()
                .iter()
                .zip(&want)
                .all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(
            same,
            format!("instance {case} (C={c}, T={t}, W={w}, M={m}) differs from the oracle"),
        )?;
    }
    let secs = clock.elapsed().as_secs_f64();
    ensure(secs < 5.0, format!("took {secs:.2} s"))?;
    Ok(format!(
        "1000 random instances bit-identical to the triple loop in {secs:.2} s"
    ))
}

// ---------------------------------------------------------------- 2

fn grad_summary(what: &str, r: &GradCheckReport) -> Result<String, String> {
    ensure(
        r.passed(),
        format!(
            "{what}: max relative error {:.2e} over {} coordinates",
            r.max_rel_error(),
            r.checked()
        ),
    )?;
    Ok(format!("{what} {:.1e}", r.max_rel_error()))
}

fn gradient_fidelity() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = GradCheckConfig {
        eps: 1e-5,
        tol: 1e-4,
        max_per_array: None,
        seed: 2,
    };
    let mut parts = Vec::new();
    let head = [LayerSpec::Flatten, LayerSpec::fc(4)];
    let isolated: [(&str, Vec<LayerSpec>); 5] = [
        (
            "conv",
            vec![LayerSpec::Conv1d {
                filters: 3,
                width: 4,
                bias: true,
            }],
        ),
        ("relu", vec![LayerSpec::conv(3, 2), LayerSpec::Relu]),
        ("maxpool", vec![LayerSpec::conv(3, 2), LayerSpec::pool(3)]),
        ("flatten", vec![]),
        (
            "fc",
            vec![
                LayerSpec::Flatten,
                LayerSpec::FullyConnected {
                    outputs: 5,
                    bias: true,
                },
                LayerSpec::Relu,
            ],
        ),
    ];
    for (name, layers) in isolated {
        let specs: Vec<LayerSpec> = layers.into_iter().chain(head).collect();
        let mut net = Network::new(&specs, (3, 10), &mut rng).map_err(e2s)?;
        let x = SignalTensor::from_vec(
            3,
            10,
            (0..30).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .map_err(e2s)?;
        let r = net
            .gradient_check(
                &x,
                2,
                &LossWeights::new(vec![0.5, 1.0, 0.7, 0.2]).map_err(e2s)?,
                &cfg,
            )
            .map_err(e2s)?;
        parts.push(grad_summary(name, &r)?);
    }

    let sub = GradCheckConfig {
        max_per_array: Some(25),
        ..cfg
    };
    let events = generate_events(
        2,
        &EventSynthConfig {
            samples: 40,
            games: 2,
            ..Default::default()
        },
    )
    .map_err(e2s)?;
    let sc = SharedCompareNet::new(SharedCompareConfig::default(), 2).map_err(e2s)?;
    let r = gradient_check(
        &sc,
        &events.samples[0],
        &LossWeights::event_defaults(),
        &sub,
    )
    .map_err(e2s)?;
    parts.push(grad_summary("shared-compare", &r)?);

    let mut teams = generate_possessions(
        2,
        &StyleProfile::distinct(2),
        &TeamSynthConfig {
            per_team: 2,
            possessions_per_game: 2,
            ..Default::default()
        },
    )
    .map_err(e2s)?;
    let mut sample = teams.samples.swap_remove(0);
    sample.team = 17;
    let st = StackedNet::new(StackedConfig::default(), 2).map_err(e2s)?;
    let r = gradient_check(&st, &sample, &LossWeights::uniform(30), &sub).map_err(e2s)?;
    parts.push(grad_summary("5conv", &r)?);

    let secs = clock.elapsed().as_secs_f64();
    ensure(secs < 300.0, format!("took {secs:.0} s"))?;
    Ok(format!(
        "max rel errors: {} ({secs:.0} s)",
        parts.join(", ")
    ))
}

// ---------------------------------------------------------------- 3

fn track(len: usize) -> AgentTrack {
    let frames: Vec<Option<(f64, f64)>> = (0..len).map(|t| Some((t as f64, 10.0))).collect();
    AgentTrack::from_positions(&frames)
}

fn event_sample(np: usize, t: usize) -> TrajectorySample {
    let mut s = generate_events(
        3,
        &EventSynthConfig {
            samples: 10,
            games: 1,
            ..Default::default()
        },
    )
    .expect("generator")
    .samples
    .swap_remove(0);
    s.persons = (0..np).map(|_| track(t)).collect();
    s.key = Some(0);
    s
}

fn possession_sample(players: usize, t: usize) -> PossessionSample {
    let mut s = generate_possessions(
        3,
        &StyleProfile::distinct(2),
        &TeamSynthConfig {
            per_team: 2,
            possessions_per_game: 2,
            ..Default::default()
        },
    )
    .expect("generator")
    .samples
    .swap_remove(0);
    s.ball = track(t);
    s.players = (0..players).map(|_| track(t)).collect();
    s
}

fn shape_fidelity() -> Outcome {
    let st = StackedNet::new(StackedConfig::default(), 3).map_err(e2s)?;
    ensure(
        st.config().input_shape() == (12, 200),
        "default stacked input is not 12 x 200",
    )?;
    let probs = st.forward(&possession_sample(5, 200)).map_err(e2s)?;
    ensure(probs.len() == 30, "stacked net does not emit 30 classes")?;
    for (p, t) in [(5, 199), (5, 201), (4, 200), (6, 200)] {
        let r = st.forward(&possession_sample(p, t));
        ensure(
            matches!(r, Err(ModelError::InputShape { .. })),
            format!("stacked net accepted {p} players x {t}"),
        )?;
    }
    let x = SignalTensor::zeros(10, 200).map_err(e2s)?;
    ensure(
        matches!(st.forward_tensor(&x), Err(ModelError::InputShape { .. })),
        "stacked net accepted 10 x 200 tensor",
    )?;

    let sc = SharedCompareNet::new(SharedCompareConfig::default(), 3).map_err(e2s)?;
    let c = sc.config();
    ensure(
        (c.group_size, c.window) == (5, 16),
        "default shared-compare is not Np=5, T=16",
    )?;
    sc.predict_known_key(&event_sample(5, 16)).map_err(e2s)?;
    for (np, t) in [(4, 16), (6, 16), (5, 15), (5, 17)] {
        for r in [
            sc.predict_known_key(&event_sample(np, t)),
            sc.predict_unknown_key(&event_sample(np, t)),
        ] {
            ensure(
                matches!(r, Err(ModelError::InputShape { .. })),
                format!("shared-compare accepted Np={np}, T={t}"),
            )?;
        }
    }
    Ok("12x200 stacked and Np=5/T=16 shared-compare accepted; 12 wrong shapes rejected with InputShape".into())
}

// ---------------------------------------------------------------- 4

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(e2s)
}

fn overfit_sanity(root: &Path) -> Outcome {
    let dir = root.join("overfit");
    std::fs::create_dir_all(&dir).map_err(e2s)?;
    let mut out = Vec::new();
    for (task, arch, lr) in [
        (TaskArg::Event, "shared_compare", 0.05),
        (TaskArg::Team, "stacked", 0.01),
    ] {
        let data = dir.join(format!("{arch}.jsonl"));
        let mut gen = GenerateArgs::new(task, 4, &data);
        (gen.samples, gen.games, gen.per_team, gen.per_game) = (120, 4, 20, 5);
        cmd_generate(&gen).map_err(e2s)?;
        let config = dir.join(format!("{arch}.toml"));
        write(
            &config,
            &format!(
                "seed = 4\n[model]\narchitecture = \"{arch}\"\n[train]\nlearning_rate = {lr}\n"
            ),
        )?;
        let mut args = TrainArgs::new(&config, &data, &dir);
        args.overfit = Some(8);
        args.name = Some(arch.into());
        let run = cmd_train(&args).map_err(e2s)?;
        let o = run.manifest.overfit.expect("overfit outcome recorded");
        let last = o.losses.last().copied().unwrap_or(f64::NAN);
        let steps = o
            .reached_at
            .ok_or(format!("{arch}: loss {last:.4} after 500 steps"))?;
        out.push(format!("{arch} loss {last:.4} after {steps} steps"));
    }
    Ok(out.join("; "))
}

// ---------------------------------------------------------------- 5

fn event_recognition(root: &Path) -> Outcome {
    let clock = Instant::now();
    let dir = root.join("events");
    std::fs::create_dir_all(&dir).map_err(e2s)?;
    let data = dir.join("events.jsonl");
    let mut gen = GenerateArgs::new(TaskArg::Event, 5, &data);
    (gen.samples, gen.games) = (5000, 10);
    cmd_generate(&gen).map_err(e2s)?;
    let config = dir.join("events.toml");
    write(
        &config,
        "seed = 5\n[model]\narchitecture = \"shared_compare\"\n\
         [train]\nepochs = 15\nlearning_rate = 0.05\npatience = 5\n\
         [split]\ntrain = 0.6\nval = 0.2\ntest = 0.2\n",
    )?;
    let mut args = TrainArgs::new(&config, &data, &dir);
    args.name = Some("run".into());
    let run = cmd_train(&args).map_err(e2s)?;
    let (train_n, _, test_n) = run.manifest.split_sizes;
    let known = &run.reports[0];
    let unknown = &run.reports[1];
    let k = known.mean_average_precision.unwrap_or(0.0);
    let u = unknown.mean_average_precision.unwrap_or(0.0);
    let secs = clock.elapsed().as_secs_f64();
    let summary = format!(
        "{train_n} train / {test_n} test: known-key mAP {k:.4}, unknown-key mAP {u:.4} ({:.0} s)",
        secs
    );
    ensure(k >= 0.80, format!("{summary}; known-key mAP below 0.80"))?;
    ensure(k >= u, format!("{summary}; unknown-key above known-key"))?;
    ensure(secs < 900.0, format!("{summary}; over 15 minutes"))?;
    Ok(summary)
}

// ---------------------------------------------------------------- 6

fn team_identification(root: &Path) -> Outcome {
    let clock = Instant::now();
    let dir = root.join("teams");
    std::fs::create_dir_all(&dir).map_err(e2s)?;
    let data = dir.join("teams.jsonl");
    let mut gen = GenerateArgs::new(TaskArg::Team, 6, &data);
    gen.profiles = ProfileSet::Distinct;
    cmd_generate(&gen).map_err(e2s)?;
    let config = dir.join("teams.toml");
    write(&config, TEAM_CONFIG)?;
    let mut args = TrainArgs::new(&config, &data, &dir);
    args.name = Some("run".into());
    let run = cmd_train(&args).map_err(e2s)?;
    let r = &run.reports[0];
    let g = r.game_accuracy.unwrap_or(0.0);
    let secs = clock.elapsed().as_secs_f64();
    let summary = format!(
        "5conv on 6 distinct teams x 200: possession acc {:.2}%, game acc {:.2}% over {} games ({secs:.0} s)",
        100.0 * r.accuracy,
        100.0 * g,
        r.games.len()
    );
    ensure(
        r.accuracy >= 0.60,
        format!("{summary}; possession acc below 60%"),
    )?;
    ensure(g >= 0.95, format!("{summary}; game acc below 95%"))?;
    ensure(secs < 1200.0, format!("{summary}; over 20 minutes"))?;
    Ok(summary)
}

const TEAM_CONFIG: &str = "seed = 6\n[model]\narchitecture = \"stacked\"\n\
    [train]\nepochs = 15\noptimizer = \"adam\"\nlearning_rate = 0.001\npatience = 4\n";

// ---------------------------------------------------------------- 7

fn ordering_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let events = generate_events(
        7,
        &EventSynthConfig {
            samples: 200,
            games: 4,
            ..Default::default()
        },
    )
    .map_err(e2s)?;
    let sc = SharedCompareNet::new(SharedCompareConfig::default(), 7).map_err(e2s)?;
    let mut worst = 0.0f64;
    let max_diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    for s in &events.samples {
        let mut perm: Vec<usize> = (0..s.persons.len()).collect();
        perm.shuffle(&mut rng);
        let p = s.permuted(&perm);
        worst = worst.max(max_diff(
            &sc.predict_known_key(s).map_err(e2s)?,
            &sc.predict_known_key(&p).map_err(e2s)?,
        ));
        worst = worst.max(max_diff(
            &sc.predict_unknown_key(s).map_err(e2s)?,
            &sc.predict_unknown_key(&p).map_err(e2s)?,
        ));
    }
    ensure(
        worst == 0.0,
        format!("shared-compare output moved by {worst:e}"),
    )?;

    let teams = generate_possessions(
        7,
        &StyleProfile::distinct(4),
        &TeamSynthConfig {
            per_team: 50,
            ..Default::default()
        },
    )
    .map_err(e2s)?;
    let st = StackedNet::new(StackedConfig::default(), 7).map_err(e2s)?;
    for s in &teams.samples {
        let mut perm: Vec<usize> = (0..s.players.len()).collect();
        perm.shuffle(&mut rng);
        worst = worst.max(max_diff(
            &st.forward(s).map_err(e2s)?,
            &st.forward(&s.permuted(&perm)).map_err(e2s)?,
        ));
    }
    ensure(worst == 0.0, format!("stacked output moved by {worst:e}"))?;
    Ok(format!(
        "{} event samples (known and unknown key) and {} possessions: max abs diff exactly 0",
        events.len(),
        teams.len()
    ))
}

// ---------------------------------------------------------------- 8

/// AP from first principles: for every positive, count the items ranked at
/// or above it (higher score, or equal score and earlier position) and the
/// positives among them.
fn brute_force_ap(scores: &[(f64, bool)]) -> Option<f64> {
    let above =
        |i: usize, j: usize| scores[j].0 > scores[i].0 || (scores[j].0 == scores[i].0 && j <= i);
    let mut terms: Vec<(usize, f64)> = Vec::new();
    for i in (0..scores.len()).filter(|&i| scores[i].1) {
        let rank = (0..scores.len()).filter(|&j| above(i, j)).count();
        let tp = (0..scores.len())
            .filter(|&j| scores[j].1 && above(i, j))
            .count();
        terms.push((rank, tp as f64 / rank as f64));
    }
    if terms.is_empty() {
        return None;
    }
    terms.sort_by_key(|t| t.0);
    let p = terms.len() as f64;
    Some(terms.iter().map(|t| t.1).sum::<f64>() / p)
}

fn metric_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_area = 0.0f64;
    let mut with_ties = 0;
    for case in 0..500 {
        let n = rng.random_range(1..60);
        let coarse = case % 2 == 0;
        let scores: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                let s = if coarse {
                    rng.random_range(0..5) as f64 / 4.0
                } else {
                    rng.random::<f64>()
                };
                (s, rng.random_bool(0.3))
            })
            .collect();
        let mut sorted: Vec<f64> = scores.iter().map(|s| s.0).collect();
        sorted.sort_by(f64::total_cmp);
        with_ties += usize::from(sorted.windows(2).any(|w| w[0] == w[1]));
        let ap = average_precision(&scores);
        let want = brute_force_ap(&scores);
        ensure(
            ap.map(f64::to_bits) == want.map(f64::to_bits),
            format!("list {case}: AP {ap:?} vs brute force {want:?}"),
        )?;
        if let Some(ap) = ap {
            let area = pr_curve_area(&pr_curve(&scores).map_err(e2s)?);
            worst_area = worst_area.max((area - ap).abs());
        }
    }
    ensure(
        worst_area <= 1e-12,
        format!("PR area differs from AP by {worst_area:e}"),
    )?;

    for case in 0..50 {
        let classes = rng.random_range(2..8);
        let predictions: Vec<Prediction> = (0..rng.random_range(1..40))
            .map(|i| Prediction {
                probs: (0..classes)
                    .map(|_| rng.random_range(0..4) as f64)
                    .collect(),
                label: rng.random_range(0..classes),
                game: i % 3,
            })
            .collect();
        let names: Vec<String> = (0..classes).map(|c| c.to_string()).collect();
        let r =
            EvalReport::from_predictions("check", &names, &predictions, &[2], true).map_err(e2s)?;
        let right = predictions
            .iter()
            .filter(|p| argmax(&p.probs) == p.label)
            .count();
        let acc = right as f64 / predictions.len() as f64;
        let hit1 = predictions
            .iter()
            .filter(|p| hit_at_k(&p.probs, p.label, 1).unwrap_or(false))
            .count();
        ensure(
            r.accuracy == acc && hit1 == right,
            format!(
                "report {case}: hit@1 {hit1}/{} vs accuracy {acc}",
                predictions.len()
            ),
        )?;
    }
    Ok(format!(
        "500 lists ({with_ties} with tied scores) match the brute-force AP bit for bit; PR area within {worst_area:.1e}; hit@1 = accuracy"
    ))
}

// ---------------------------------------------------------------- 9

fn determinism(root: &Path) -> Outcome {
    let dir = root.join("determinism");
    std::fs::create_dir_all(&dir).map_err(e2s)?;
    let mut out = Vec::new();
    for (task, arch) in [
        (TaskArg::Event, "shared_compare"),
        (TaskArg::Team, "stacked"),
    ] {
        let data = dir.join(format!("{arch}.jsonl"));
        let mut gen = GenerateArgs::new(task, 9, &data);
        (
            gen.samples,
            gen.games,
            gen.teams,
            gen.per_team,
            gen.per_game,
        ) = (300, 4, 3, 15, 5);
        cmd_generate(&gen).map_err(e2s)?;
        let config = dir.join(format!("{arch}.toml"));
        let variant = if arch == "stacked" {
            "variant = \"3conv\"\n"
        } else {
            ""
        };
        write(
            &config,
            &format!("seed = 9\n[model]\narchitecture = \"{arch}\"\n{variant}[train]\nepochs = 2\nbatch_size = 16\nthreads = 1\n"),
        )?;
        let mut runs = Vec::new();
        for _ in 0..2 {
            let args = TrainArgs::new(&config, &data, dir.join(arch));
            runs.push(cmd_train(&args).map_err(e2s)?);
        }
        ensure(runs[0].dir != runs[1].dir, "runs share a directory")?;
        let ckpt = |i: usize| file_sha256(&runs[i].dir.join("model.ckpt"));
        ensure(
            ckpt(0).map_err(e2s)? == ckpt(1).map_err(e2s)?,
            format!("{arch}: checkpoints differ"),
        )?;
        for (a, b) in runs[0].reports.iter().zip(&runs[1].reports) {
            ensure(
                a == b && a.to_json_lines() == b.to_json_lines(),
                format!("{arch}: reports differ"),
            )?;
        }
        for (a, b) in runs[0]
            .manifest
            .reports
            .iter()
            .zip(&runs[1].manifest.reports)
        {
            let read = |p: &Path| std::fs::read(p).map_err(e2s);
            ensure(
                read(a)? == read(b)?,
                format!("{arch}: {} differs", a.display()),
            )?;
        }
        out.push(format!(
            "{arch} checkpoint {}",
            &ckpt(0).map_err(e2s)?[..12]
        ));
    }
    Ok(format!(
        "identical checkpoints and reports across two runs: {}",
        out.join(", ")
    ))
}

// ---------------------------------------------------------------- 10

fn sweep(root: &Path) -> Outcome {
    let clock = Instant::now();
    let dir = root.join("sweep");
    std::fs::create_dir_all(&dir).map_err(e2s)?;
    let data = dir.join("teams.jsonl");
    let mut gen = GenerateArgs::new(TaskArg::Team, 10, &data);
    (gen.teams, gen.per_team) = (SWEEP_TEAMS, SWEEP_PER_TEAM);
    cmd_generate(&gen).map_err(e2s)?;
    let config = dir.join("template.toml");
    write(&config, SWEEP_CONFIG)?;
    let table = cmd_sweep(&SweepArgs::new(&config, &data, dir.join("out"))).map_err(e2s)?;
    let text = table.to_text();
    println!(
        "{}",
        text.trim_end()
            .lines()
            .map(|l| format!("      {l}"))
            .collect::<Vec<_>>()
            .join("\n")
    );
    let header = text.lines().next().unwrap_or_default();
    for col in ["acc", "hit@2", "hit@3", "game acc"] {
        ensure(header.contains(col), format!("table lacks column {col}"))?;
    }
    let names = [
        "2conv",
        "3conv",
        "4conv",
        "5conv",
        "5conv+2fc",
        "3 3 3 2 2",
        "5 3 3 3 3",
        "7 5 5 3 3",
        "9 7 7 5 5",
        "base=16",
        "base=32",
        "base=64",
        "base=128",
    ];
    for n in names {
        let row = table.row(n).ok_or(format!("no row for {n}"))?;
        ensure(
            !matches!(row.status, SweepStatus::Skipped { .. }) && row.game_acc.is_some(),
            format!("variant {n} was not trained"),
        )?;
    }
    let g = |n: &str| table.row(n).and_then(|r| r.game_acc).unwrap_or(0.0);
    let secs = clock.elapsed().as_secs_f64();
    let summary = format!(
        "{} variants; game acc 5conv {:.2}% vs 2conv {:.2}% ({secs:.0} s)",
        table.rows.len(),
        100.0 * g("5conv"),
        100.0 * g("2conv")
    );
    ensure(
        g("5conv") > g("2conv"),
        format!("{summary}; 5conv does not beat 2conv"),
    )?;
    Ok(summary)
}

// Two twin pairs: only the ball-trip order separates twins, which needs
// more temporal context than two conv layers see.
const SWEEP_TEAMS: usize = 4;
const SWEEP_PER_TEAM: usize = 200;
const SWEEP_CONFIG: &str = "seed = 10\n[model]\narchitecture = \"stacked\"\n\
    [train]\nepochs = 20\noptimizer = \"adam\"\nlearning_rate = 0.001\npatience = 20\n";

// ----------------------------------------------------------------

fn main() {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |n: usize| selected.is_empty() || selected.contains(&n);
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let criteria: [Criterion; 10] = [
        (1, "conv oracle equivalence", Box::new(conv_oracle)),
        (2, "gradient fidelity", Box::new(gradient_fidelity)),
        (3, "shape fidelity", Box::new(shape_fidelity)),
        (4, "overfit sanity", Box::new(|| overfit_sanity(root))),
        (
            5,
            "synthetic event recognition",
            Box::new(|| event_recognition(root)),
        ),
        (
            6,
            "synthetic team identification",
            Box::new(|| team_identification(root)),
        ),
        (7, "ordering invariance", Box::new(ordering_invariance)),
        (8, "metric correctness", Box::new(metric_correctness)),
        (9, "training determinism", Box::new(|| determinism(root))),
        (10, "sweep harness", Box::new(|| sweep(root))),
    ];
    let mut failed = Vec::new();
    for (n, name, run) in &criteria {
        if !want(*n) {
            continue;
        }
        match run() {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                println!("criterion {n:>2} FAIL  {name}: {detail}");
                failed.push(*n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
