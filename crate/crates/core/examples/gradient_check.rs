//! Finite-difference gradient checks: a bare layer stack and both
//! architectures (reduced sizes so the check runs in about a second).

use std::error::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajnet::data::{
    generate_events, generate_possessions, EventSynthConfig, StyleProfile, TeamSynthConfig,
};
use trajnet::models::{
    gradient_check, SharedCompareConfig, SharedCompareNet, StackedConfig, StackedNet,
};
use trajnet::nn::{GradCheckConfig, GradCheckReport, LayerSpec, LossWeights, Network};
use trajnet::tensor::SignalTensor;

fn show(what: &str, r: &GradCheckReport) {
    println!(
        "{what:<16} {} coords, {} flagged at kinks, max rel error {:.2e} -> {}",
        r.checked(),
        r.flagged(),
        r.max_rel_error(),
        if r.passed() { "ok" } else { "FAIL" }
    );
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = GradCheckConfig {
        max_per_array: Some(40),
        ..GradCheckConfig::default()
    };

    let specs = [
        LayerSpec::conv(4, 3),
        LayerSpec::Relu,
        LayerSpec::pool(2),
        LayerSpec::Flatten,
        LayerSpec::fc(3),
    ];
    let mut net = Network::new(&specs, (2, 12), &mut rng)?;
    let x = SignalTensor::from_vec(
        2,
        12,
        (0..24).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )?;
    show(
        "conv stack",
        &net.gradient_check(&x, 1, &LossWeights::uniform(3), &cfg)?,
    );

    let events = generate_events(
        1,
        &EventSynthConfig {
            samples: 12,
            games: 2,
            ..Default::default()
        },
    )?;
    let sc = SharedCompareNet::new(
        SharedCompareConfig {
            shared: vec![LayerSpec::conv(8, 3), LayerSpec::Relu, LayerSpec::pool(2)],
            compare: vec![LayerSpec::conv(8, 3), LayerSpec::Relu, LayerSpec::pool(2)],
            ..SharedCompareConfig::default()
        },
        2,
    )?;
    let r = gradient_check(
        &sc,
        &events.samples[0],
        &LossWeights::event_defaults(),
        &cfg,
    )?;
    show("shared-compare", &r);

    let teams = generate_possessions(
        1,
        &StyleProfile::distinct(3),
        &TeamSynthConfig {
            per_team: 2,
            possessions_per_game: 2,
            ..Default::default()
        },
    )?;
    let st = StackedNet::new(
        StackedConfig {
            layers: vec![LayerSpec::conv(6, 5), LayerSpec::Relu, LayerSpec::pool(4)],
            num_classes: 3,
            ..StackedConfig::default()
        },
        3,
    )?;
    show(
        "stacked",
        &gradient_check(&st, &teams.samples[0], &LossWeights::uniform(3), &cfg)?,
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
