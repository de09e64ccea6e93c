//! Synthetic team possessions from twin style profiles.

use std::collections::BTreeMap;
use std::error::Error;

use trajnet::data::{generate_possessions, StyleProfile, TeamSynthConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let profiles = StyleProfile::league(4);
    for p in &profiles {
        let gaps: Vec<String> = p
            .motifs
            .iter()
            .map(|m| format!("->{}:{}", m.receiver, m.gap))
            .collect();
        println!(
            "{}: spread {:.1} ft, speed {:.1} ft/s, motifs {}",
            p.name,
            p.formation_spread,
            p.speed_mean,
            gaps.join(" ")
        );
    }
    let cfg = TeamSynthConfig {
        per_team: 40,
        ..TeamSynthConfig::default()
    };
    let ds = generate_possessions(3, &profiles, &cfg)?;
    println!("{} possessions of {} frames", ds.len(), ds.header.t);

    let mut games: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for s in &ds.samples {
        let e = games.entry(s.meta.game).or_insert((s.team, 0));
        assert_eq!(e.0, s.team, "a game holds one team");
        e.1 += 1;
    }
    for (g, (team, n)) in games {
        println!("  game {g:>3}: {} x{n}", ds.header.classes[team]);
    }
    let s = &ds.samples[0];
    let present = s.ball.mask.iter().filter(|&&m| m).count();
    println!(
        "first possession: ball tracked on {present} of {} frames",
        s.window()
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
