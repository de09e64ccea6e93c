//! Raw tracks to samples: event windowing around annotated frames and
//! possession extraction at half the native frame rate.

use std::error::Error;

use trajnet::data::{
    extract_possessions, window_events, AgentTrack, EventMark, PossessionMark, RawTracks,
    TrackTable, EVENT_WINDOW,
};
use trajnet::data::{generate_event_tracks, EventSynthConfig};

fn line(len: usize, x0: f64, dx: f64) -> AgentTrack {
    let frames: Vec<Option<(f64, f64)>> =
        (0..len).map(|t| Some((x0 + dx * t as f64, 0.0))).collect();
    AgentTrack::from_positions(&frames)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Three agents on a line; agent 1 is the actor.
    let table = TrackTable {
        game: 0,
        agents: vec![
            line(300, 0.0, 1.0),
            line(300, 5.0, 1.0),
            line(300, 40.0, 0.0),
        ],
    };
    let marks = [
        EventMark {
            center_frame: 50,
            key: 1,
            label: 0,
        },
        EventMark {
            center_frame: 60,
            key: 1,
            label: 3,
        },
        EventMark {
            center_frame: 200,
            key: 1,
            label: 4,
        },
    ];
    let windows = window_events(&table, &marks, 2)?;
    // The first two events are closer than the separation threshold and both go.
    println!("{} of {} events kept", windows.len(), marks.len());
    let w = &windows[0];
    println!(
        "window of {EVENT_WINDOW} frames centred on {}: key slot {:?}, first x of each slot {:?}",
        w.meta.center_frame,
        w.key,
        w.persons.iter().map(|p| p.x[0]).collect::<Vec<_>>()
    );

    // A 150-frame possession: every other frame, front-padded to 200.
    let team_table = TrackTable {
        game: 1,
        agents: (0..6).map(|i| line(400, i as f64, 0.5)).collect(),
    };
    let possession = PossessionMark {
        start: 100,
        end: 400,
        team: 0,
        players: vec![1, 2, 3, 4, 5],
        possession: 0,
    };
    let p = &extract_possessions(&team_table, 0, &[possession])?[0];
    let absent = p.ball.mask.iter().take_while(|&&m| !m).count();
    println!(
        "possession: {} frames, {absent} padded at the front",
        p.window()
    );

    // The same through the raw-track file used by `trajnet preprocess`.
    let games = generate_event_tracks(
        1,
        &EventSynthConfig {
            samples: 120,
            games: 2,
            ..EventSynthConfig::default()
        },
    )?;
    let raw = RawTracks::Event {
        classes: trajnet::data::EVENT_CLASSES
            .iter()
            .map(|c| c.name().to_string())
            .collect(),
        bounds: trajnet::data::CoordBounds::RINK,
        games,
    };
    let ds = raw.preprocess(5)?;
    println!("raw synthetic tracks: {} windows", ds.len());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
