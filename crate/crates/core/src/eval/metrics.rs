use serde::Serialize;

use super::EvalError;

/// Indices ordered by descending score; equal scores keep input order.
fn ranking(scores: &[(f64, bool)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].0.total_cmp(&scores[a].0));
    idx
}

/// Un-interpolated average precision: the mean, over positives, of the
/// precision at each positive's rank. `None` without positives.
pub fn average_precision(scores: &[(f64, bool)]) -> Option<f64> {
    let positives = scores.iter().filter(|s| s.1).count();
    if positives == 0 {
        return None;
    }
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in ranking(scores).iter().enumerate() {
        if scores[i].1 {
            tp += 1;
            sum += tp as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / positives as f64)
}

/// `(recall, precision)` after each rank cut of the same ranking
/// [`average_precision`] uses. Recall never decreases along the list.
pub fn pr_curve(scores: &[(f64, bool)]) -> Result<Vec<(f64, f64)>, EvalError> {
    let positives = scores.iter().filter(|s| s.1).count();
    if positives == 0 {
        return Err(EvalError::NoPositives(0));
    }
    let mut tp = 0usize;
    Ok(ranking(scores)
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            tp += usize::from(scores[i].1);
            (tp as f64 / positives as f64, tp as f64 / (rank + 1) as f64)
        })
        .collect())
}

/// Step integral of precision over recall.
pub fn pr_curve_area(curve: &[(f64, f64)]) -> f64 {
    let mut prev = 0.0;
    let mut area = 0.0;
    for &(r, p) in curve {
        area += p * (r - prev);
        prev = r;
    }
    area
}

/// Mean of the defined per-class APs, and the classes left out.
pub fn mean_average_precision(aps: &[Option<f64>]) -> (Option<f64>, Vec<usize>) {
    let excluded: Vec<usize> = aps
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_none())
        .map(|(i, _)| i)
        .collect();
    for c in &excluded {
        log::warn!("class {c} has no positive examples; excluded from mAP");
    }
    let defined: Vec<f64> = aps.iter().flatten().copied().collect();
    let map = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    (map, excluded)
}

/// Whether `label` is among the `k` most probable classes (equal
/// probabilities rank the smaller class id first).
pub fn hit_at_k(probs: &[f64], label: usize, k: usize) -> Result<bool, EvalError> {
    let n = probs.len();
    if k == 0 || k > n {
        return Err(EvalError::KOutOfRange { k, classes: n });
    }
    if label >= n {
        return Err(EvalError::LabelOutOfRange { label, classes: n });
    }
    let p = probs[label];
    let ahead = probs
        .iter()
        .enumerate()
        .filter(|&(c, &q)| q > p || (q == p && c < label))
        .count();
    Ok(ahead < k)
}

/// Top-1 class, smaller id on ties.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (c, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = c;
        }
    }
    best
}

pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Vote {
    pub class: usize,
    /// More than one class reached the top count.
    pub tie: bool,
}

/// Modal class; ties go to the smaller class id and are flagged.
pub fn majority_vote(votes: &[usize]) -> Result<Vote, EvalError> {
    let max = *votes.iter().max().ok_or(EvalError::EmptyVote)?;
    let mut counts = vec![0usize; max + 1];
    for &v in votes {
        counts[v] += 1;
    }
    let top = *counts.iter().max().expect("non-empty");
    let class = counts.iter().position(|&c| c == top).expect("top exists");
    let tie = counts.iter().filter(|&&c| c == top).count() > 1;
    Ok(Vote { class, tie })
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_matrix(predicted: &[usize], labels: &[usize], classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &l) in predicted.iter().zip(labels) {
        m[l][p] += 1;
    }
    m
}
