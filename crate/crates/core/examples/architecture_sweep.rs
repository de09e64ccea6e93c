//! Depth sweep of the stacked net on a small team set, printed as the
//! acc / hit@2 / hit@3 / game acc table.

use std::error::Error;

use trajnet::cli::{cmd_generate, cmd_sweep, GenerateArgs, SweepArgs, TaskArg};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("teams.jsonl");
    let mut gen = GenerateArgs::new(TaskArg::Team, 4, &data);
    (gen.teams, gen.per_team, gen.per_game) = (2, 20, 5);
    cmd_generate(&gen)?;

    let config = dir.path().join("template.toml");
    std::fs::write(
        &config,
        "seed = 4\n[model]\narchitecture = \"stacked\"\n[train]\nepochs = 1\nlearning_rate = 0.005\n",
    )?;
    let mut args = SweepArgs::new(&config, &data, dir.path().join("sweep"));
    // "5 3 3 3 3" is the default five-conv net, so it reuses the 5conv row;
    // "9conv" does not fit a 200-frame input and is reported as skipped.
    args.variant = ["2conv", "5conv", "5 3 3 3 3", "9conv"]
        .map(String::from)
        .to_vec();
    let table = cmd_sweep(&args)?;
    print!("{}", table.to_text());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
