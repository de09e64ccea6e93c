//! Ranking and classification metrics and the evaluation report.

pub mod metrics;
pub mod report;

use thiserror::Error;

pub use metrics::{
    accuracy, average_precision, confusion_matrix, hit_at_k, majority_vote, mean_average_precision,
    pr_curve, pr_curve_area, Vote,
};
pub use report::{EvalReport, GameVote, Prediction};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k = {k} out of range 1..={classes}")]
    KOutOfRange { k: usize, classes: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("majority vote over an empty list")]
    EmptyVote,
    #[error("no predictions to evaluate")]
    Empty,
    #[error("no positive examples for class {0}")]
    NoPositives(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
