//! Event recognition end to end through the library form of the CLI:
//! generate, train the shared-compare net, evaluate with and without the
//! key agent.
//!
//! `cargo run --release --example event_recognition -- 15` trains for 15
//! epochs on 5000 windows; the default is a one-epoch smoke run.

use std::error::Error;

use trajnet::cli::{cmd_eval, cmd_generate, cmd_train, EvalArgs, GenerateArgs, TaskArg, TrainArgs};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let epochs: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1);
    let full = epochs > 1;
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("events.jsonl");
    let mut gen = GenerateArgs::new(TaskArg::Event, 1, &data);
    (gen.samples, gen.games) = if full { (5000, 10) } else { (400, 5) };
    cmd_generate(&gen)?;

    let config = dir.path().join("events.toml");
    std::fs::write(
        &config,
        format!(
            "seed = 1\n[model]\narchitecture = \"shared_compare\"\n\
             [train]\nepochs = {epochs}\nlearning_rate = 0.05\npatience = 5\n\
             [split]\ntrain = 0.6\nval = 0.2\ntest = 0.2\n"
        ),
    )?;
    let mut args = TrainArgs::new(&config, &data, dir.path().join("runs"));
    args.name = Some("events".into());
    let run = cmd_train(&args)?;
    for e in &run.manifest.history {
        println!(
            "epoch {}: loss {:.4}, val mAP {:.4}",
            e.epoch,
            e.train_loss,
            e.val_score.unwrap_or(0.0)
        );
    }

    let reports = cmd_eval(&EvalArgs::new(
        run.dir.join("model.ckpt"),
        &data,
        dir.path().join("eval"),
    ))?;
    for r in &reports {
        println!(
            "{:<12} mAP {:.4}  acc {:.2}%",
            r.title,
            r.mean_average_precision.unwrap_or(0.0),
            100.0 * r.accuracy
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
