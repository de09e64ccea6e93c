//! Team identification: train the stacked net on synthetic possessions and
//! vote per game.
//!
//! `cargo run --release --example team_identification -- 20` runs the full
//! six-team setup (distinct styles, 200 possessions each); the default is a small smoke run.

use std::error::Error;

use trajnet::cli::{
    cmd_generate, cmd_predict, cmd_train, GenerateArgs, PredictArgs, ProfileSet, RegimeArg,
    TaskArg, TrainArgs,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let epochs: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1);
    let full = epochs > 1;
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("teams.jsonl");
    let mut gen = GenerateArgs::new(TaskArg::Team, 1, &data);
    gen.profiles = ProfileSet::Distinct;
    if !full {
        (gen.teams, gen.per_team, gen.per_game) = (2, 25, 5);
    }
    cmd_generate(&gen)?;

    let config = dir.path().join("teams.toml");
    let variant = if full { "5conv" } else { "2conv" };
    std::fs::write(
        &config,
        format!(
            "seed = 1\n[model]\narchitecture = \"stacked\"\nvariant = \"{variant}\"\n\
             [train]\nepochs = {epochs}\noptimizer = \"adam\"\nlearning_rate = 0.001\n"
        ),
    )?;
    let mut args = TrainArgs::new(&config, &data, dir.path().join("runs"));
    args.name = Some("teams".into());
    let run = cmd_train(&args)?;
    print!("{}", run.reports[0].to_text());

    let out = dir.path().join("predictions.jsonl");
    let lines = cmd_predict(&PredictArgs {
        checkpoint: run.dir.join("model.ckpt"),
        data: data.clone(),
        regime: RegimeArg::Known,
        out,
        threads: 1,
    })?;
    let right = lines.iter().filter(|l| l.label == l.predicted).count();
    println!("all possessions: {right}/{} correct", lines.len());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
