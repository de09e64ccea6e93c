//! Ranking and classification metrics on hand-made scores.

use std::error::Error;

use trajnet::eval::{
    average_precision, hit_at_k, majority_vote, pr_curve, pr_curve_area, EvalReport, Prediction,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Positives ranked 1st and 3rd: AP = (1/1 + 2/3) / 2.
    let scores = [(0.9, true), (0.8, false), (0.7, true), (0.1, false)];
    let ap = average_precision(&scores).expect("has positives");
    println!("AP = {ap:.4}");
    let curve = pr_curve(&scores)?;
    for (r, p) in &curve {
        println!("  recall {r:.2}  precision {p:.3}");
    }
    println!("step area = {:.4}", pr_curve_area(&curve));

    let probs = [0.1, 0.5, 0.4];
    println!(
        "hit@1 {} hit@2 {} for label 2",
        hit_at_k(&probs, 2, 1)?,
        hit_at_k(&probs, 2, 2)?
    );
    let vote = majority_vote(&[2, 1, 2, 1])?;
    println!("vote [2,1,2,1] -> {} (tie: {})", vote.class, vote.tie);

    let classes: Vec<String> = ["home", "away"].iter().map(|s| s.to_string()).collect();
    let preds = vec![
        Prediction {
            probs: vec![0.8, 0.2],
            label: 0,
            game: 1,
        },
        Prediction {
            probs: vec![0.6, 0.4],
            label: 0,
            game: 1,
        },
        Prediction {
            probs: vec![0.3, 0.7],
            label: 0,
            game: 1,
        },
        Prediction {
            probs: vec![0.4, 0.6],
            label: 1,
            game: 2,
        },
    ];
    let report = EvalReport::from_predictions("demo", &classes, &preds, &[2], true)?;
    print!("{}", report.to_text());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
