//! Saving weights and restoring them bit for bit.

use std::error::Error;

use trajnet::data::{generate_possessions, StyleProfile, TeamSynthConfig};
use trajnet::models::{StackedConfig, StackedNet, TrajectoryModel};
use trajnet::nn::Checkpoint;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = StackedConfig::depth_variant(3, 0)?;
    let net = StackedNet::new(config.clone(), 11)?;
    let path = std::env::temp_dir().join(format!("trajnet-example-{}.ckpt", std::process::id()));
    Checkpoint::from_params(config.clone(), net.params()).write(&path)?;
    let bytes = std::fs::metadata(&path)?.len();

    let ckpt: Checkpoint<StackedConfig> = Checkpoint::read(&path)?;
    let mut restored = StackedNet::new(ckpt.header.clone(), 0)?;
    ckpt.restore_into(restored.params_mut())?;
    std::fs::remove_file(&path)?;

    let ds = generate_possessions(
        2,
        &StyleProfile::distinct(2),
        &TeamSynthConfig {
            per_team: 2,
            possessions_per_game: 2,
            ..Default::default()
        },
    )?;
    let a = net.forward(&ds.samples[0])?;
    let b = restored.forward(&ds.samples[0])?;
    let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    println!(
        "{} parameters, {bytes} bytes on disk; restored outputs identical: {same}",
        net.params().num_scalars()
    );
    assert!(same);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
