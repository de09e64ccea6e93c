//! Two single-threaded runs with the same config and seed write identical
//! checkpoints; a different seed does not.

use std::error::Error;

use trajnet::cli::{cmd_generate, cmd_train, file_sha256, GenerateArgs, TaskArg, TrainArgs};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("events.jsonl");
    let mut gen = GenerateArgs::new(TaskArg::Event, 9, &data);
    (gen.samples, gen.games) = (150, 4);
    cmd_generate(&gen)?;
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "seed = 3\n[model]\narchitecture = \"shared_compare\"\n[train]\nepochs = 1\nbatch_size = 16\n",
    )?;

    let mut digests = Vec::new();
    for seed in [3, 3, 4] {
        let mut args = TrainArgs::new(&config, &data, dir.path().join("runs"));
        args.seed = Some(seed);
        let run = cmd_train(&args)?;
        let d = file_sha256(&run.dir.join("model.ckpt"))?;
        println!(
            "seed {seed}: {} -> {}",
            run.dir.file_name().unwrap().to_string_lossy(),
            &d[..16]
        );
        digests.push(d);
    }
    assert_eq!(digests[0], digests[1]);
    assert_ne!(digests[0], digests[2]);
    println!("same seed, same checkpoint");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
