//! End-to-end runs of the command functions on small synthetic data.

use std::path::Path;

use trajnet::cli::{
    cmd_eval, cmd_generate, cmd_predict, cmd_preprocess, cmd_train, file_sha256, manifest_path,
    run, CliError, EvalArgs, FileManifest, GenerateArgs, PredictArgs, PreprocessArgs, RegimeArg,
    SplitArg, TaskArg, TrainArgs,
};
use trajnet::data::{load_dataset, LoadedDataset};

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn small_events(dir: &Path, seed: u64) -> std::path::PathBuf {
    let out = dir.join(format!("events-{seed}.jsonl"));
    let mut g = GenerateArgs::new(TaskArg::Event, seed, &out);
    (g.samples, g.games) = (160, 4);
    cmd_generate(&g).unwrap();
    out
}

#[test]
fn generate_is_reproducible_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_events(dir.path(), 3);
    let b = dir.path().join("again.jsonl");
    let mut g = GenerateArgs::new(TaskArg::Event, 3, &b);
    (g.samples, g.games) = (160, 4);
    let m = cmd_generate(&g).unwrap();
    assert_eq!(file_sha256(&a).unwrap(), file_sha256(&b).unwrap());
    assert_eq!(m.sha256, file_sha256(&b).unwrap());
    assert_eq!(m.samples, Some(160));
    let on_disk: FileManifest =
        serde_json::from_slice(&std::fs::read(manifest_path(&b)).unwrap()).unwrap();
    assert_eq!(on_disk.sha256, m.sha256);
    assert_ne!(file_sha256(&small_events(dir.path(), 4)).unwrap(), m.sha256);
}

#[test]
fn class_mix_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mix.jsonl");
    let mut g = GenerateArgs::new(TaskArg::Event, 5, &out);
    (g.samples, g.games) = (2000, 4);
    g.mix = Some("pass=0.5".into());
    cmd_generate(&g).unwrap();
    let LoadedDataset::Events(d) = load_dataset(&out).unwrap() else {
        panic!("event dataset expected")
    };
    let pass = d.header.classes.iter().position(|c| c == "pass").unwrap();
    let frac = d.samples.iter().filter(|s| s.label == pass).count() as f64 / d.samples.len() as f64;
    assert!((frac - 0.5).abs() < 0.05, "pass fraction {frac}");
}

#[test]
fn raw_tracks_preprocess_to_the_same_dataset() {
    let dir = tempfile::tempdir().unwrap();
    for task in [TaskArg::Event, TaskArg::Team] {
        let direct = dir.path().join(format!("{task:?}.jsonl"));
        let raw = dir.path().join(format!("{task:?}.raw.json"));
        let mut g = GenerateArgs::new(task, 8, &direct);
        (g.samples, g.games, g.teams, g.per_team, g.per_game) = (80, 2, 2, 10, 5);
        cmd_generate(&g).unwrap();
        g.raw = true;
        g.out = raw.clone();
        cmd_generate(&g).unwrap();
        let processed = dir.path().join(format!("{task:?}.processed.jsonl"));
        let m = cmd_preprocess(&PreprocessArgs {
            tracks: raw.clone(),
            np: 5,
            out: processed.clone(),
        })
        .unwrap();
        assert_eq!(
            m.source.as_ref().map(|s| &s.1),
            Some(&file_sha256(&raw).unwrap())
        );
        assert_eq!(
            file_sha256(&processed).unwrap(),
            file_sha256(&direct).unwrap(),
            "{task:?}"
        );
    }
}

#[test]
fn train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_events(dir.path(), 6);
    let config = dir.path().join("run.toml");
    write(
        &config,
        "seed = 6\n[model]\narchitecture = \"shared_compare\"\n[train]\nepochs = 2\nlearning_rate = 0.05\n",
    );
    let mut args = TrainArgs::new(&config, &data, dir.path().join("runs"));
    args.name = Some("r".into());
    let run_ = cmd_train(&args).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_.dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(
        manifest["dataset_sha256"],
        file_sha256(&data).unwrap().as_str()
    );
    assert_eq!(manifest["history"].as_array().unwrap().len(), 2);
    assert_eq!(run_.manifest.history.len(), 2);
    for r in &run_.manifest.reports {
        assert!(r.exists(), "{}", r.display());
    }
    assert!(run_.dir.join("config.toml").exists());

    let ckpt = run_.dir.join("model.ckpt");
    let mut eval = EvalArgs::new(&ckpt, &data, dir.path().join("eval"));
    eval.regime = RegimeArg::Both;
    let reports = cmd_eval(&eval).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(
        reports[0], run_.reports[0],
        "stored test split reproduces the training-time report"
    );

    eval.split = SplitArg::All;
    eval.regime = RegimeArg::Known;
    let all = cmd_eval(&eval).unwrap();
    assert_eq!(all[0].samples, 160);

    let out = dir.path().join("pred.jsonl");
    let lines = cmd_predict(&PredictArgs {
        checkpoint: ckpt.clone(),
        data: data.clone(),
        regime: RegimeArg::Known,
        out: out.clone(),
        threads: 1,
    })
    .unwrap();
    assert_eq!(lines.len(), 160);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 160);
    for l in &lines {
        assert!((l.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    // the stored split belongs to the training file only
    let other = small_events(dir.path(), 7);
    let mut eval = EvalArgs::new(&ckpt, &other, dir.path().join("eval2"));
    eval.split = SplitArg::Test;
    assert!(matches!(cmd_eval(&eval), Err(CliError::Mismatch(_))));
}

#[test]
fn task_mismatch_is_a_classed_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_events(dir.path(), 9);
    let config = dir.path().join("stacked.toml");
    write(&config, "[model]\narchitecture = \"stacked\"\n");
    let err = cmd_train(&TrainArgs::new(&config, &data, dir.path())).unwrap_err();
    assert!(matches!(err, CliError::Mismatch(_)), "{err}");
    let code = run([
        "trajnet",
        "train",
        "--config",
        config.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, err.exit_code());
    let missing = run([
        "trajnet",
        "eval",
        "--checkpoint",
        "/nonexistent.ckpt",
        "--data",
        data.to_str().unwrap(),
        "-o",
        dir.path().join("e").to_str().unwrap(),
    ]);
    assert_ne!(missing, 0);
    assert_ne!(missing, err.exit_code());
}
