//! Synthetic event windows: class counts, a mix override, and one sample.

use std::error::Error;

use trajnet::data::{generate_events, ClassMix, EventSynthConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = EventSynthConfig {
        samples: 600,
        games: 4,
        ..EventSynthConfig::default()
    };
    let ds = generate_events(7, &cfg)?;
    println!(
        "{} windows of {} agents x {} frames",
        ds.len(),
        ds.header.np,
        ds.header.t
    );
    for (name, n) in ds.header.classes.iter().zip(ds.class_counts()) {
        println!(
            "  {name:<16} {n:>4}  ({:.1}%)",
            100.0 * n as f64 / ds.len() as f64
        );
    }

    // Half passes, the rest in the default proportions.
    let balanced = generate_events(
        7,
        &EventSynthConfig {
            mix: ClassMix::parse("pass=0.5")?,
            ..cfg
        },
    )?;
    println!("with pass=0.5: {} passes", balanced.class_counts()[0]);

    let s = &ds.samples[0];
    let key = s.key.expect("generated samples carry their key agent");
    let track = &s.persons[key];
    println!(
        "sample 0: {} by agent slot {key}, game {}, key moves from ({:.1}, {:.1}) to ({:.1}, {:.1})",
        ds.header.classes[s.label],
        s.meta.game,
        track.x[0],
        track.y[0],
        track.x[15],
        track.y[15]
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
