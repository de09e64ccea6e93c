use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::metrics::{
    argmax, average_precision, confusion_matrix, hit_at_k, majority_vote, mean_average_precision,
    pr_curve,
};
use super::EvalError;

/// One evaluated sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub label: usize,
    pub game: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameVote {
    pub game: u32,
    pub predicted: usize,
    pub truth: usize,
    pub tie: bool,
    pub possessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub title: String,
    pub classes: Vec<String>,
    pub samples: usize,
    pub ap_variant: String,
    /// One-vs-rest AP per class; `None` for classes without positives.
    pub average_precision: Vec<Option<f64>>,
    pub mean_average_precision: Option<f64>,
    pub accuracy: f64,
    pub hit_at: Vec<(usize, f64)>,
    pub confusion: Vec<Vec<usize>>,
    pub games: Vec<GameVote>,
    pub game_accuracy: Option<f64>,
    #[serde(skip)]
    pub pr_curves: Vec<Option<Vec<(f64, f64)>>>,
}

impl EvalReport {
    /// Builds every metric from `predictions`. `ks` lists the hit@k levels
    /// (k = 1 is always included as accuracy); `vote_by_game` adds the
    /// majority-vote table.
    pub fn from_predictions(
        title: impl Into<String>,
        classes: &[String],
        predictions: &[Prediction],
        ks: &[usize],
        vote_by_game: bool,
    ) -> Result<Self, EvalError> {
        let n = classes.len();
        if predictions.is_empty() {
            return Err(EvalError::Empty);
        }
        for p in predictions {
            if p.label >= n || p.probs.len() != n {
                return Err(EvalError::LabelOutOfRange {
                    label: p.label,
                    classes: n,
                });
            }
        }
        let labels: Vec<usize> = predictions.iter().map(|p| p.label).collect();
        let top: Vec<usize> = predictions.iter().map(|p| argmax(&p.probs)).collect();

        let mut aps = Vec::with_capacity(n);
        let mut curves = Vec::with_capacity(n);
        for c in 0..n {
            let scores: Vec<(f64, bool)> = predictions
                .iter()
                .map(|p| (p.probs[c], p.label == c))
                .collect();
            aps.push(average_precision(&scores));
            curves.push(pr_curve(&scores).ok());
        }
        let (map, _) = mean_average_precision(&aps);

        let hit_rate = |k: usize| -> Result<f64, EvalError> {
            let mut hits = 0usize;
            for p in predictions {
                hits += usize::from(hit_at_k(&p.probs, p.label, k)?);
            }
            Ok(hits as f64 / predictions.len() as f64)
        };
        let accuracy = hit_rate(1)?;
        let mut hit_at = Vec::new();
        for &k in ks.iter().filter(|&&k| k > 1) {
            hit_at.push((k, hit_rate(k)?));
        }

        let mut games = Vec::new();
        let mut game_accuracy = None;
        if vote_by_game {
            let mut by_game: BTreeMap<u32, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for (p, &t) in predictions.iter().zip(&top) {
                let e = by_game.entry(p.game).or_default();
                e.0.push(t);
                e.1.push(p.label);
            }
            for (game, (votes, truth)) in by_game {
                let v = majority_vote(&votes)?;
                games.push(GameVote {
                    game,
                    predicted: v.class,
                    truth: majority_vote(&truth)?.class,
                    tie: v.tie,
                    possessions: votes.len(),
                });
            }
            let right = games.iter().filter(|g| g.predicted == g.truth).count();
            game_accuracy = Some(right as f64 / games.len() as f64);
        }

        Ok(Self {
            title: title.into(),
            classes: classes.to_vec(),
            samples: predictions.len(),
            ap_variant: "uninterpolated".into(),
            average_precision: aps,
            mean_average_precision: map,
            accuracy,
            hit_at,
            confusion: confusion_matrix(&top, &labels, n),
            games,
            game_accuracy,
            pr_curves: curves,
        })
    }

    pub fn hit_at(&self, k: usize) -> Option<f64> {
        if k == 1 {
            return Some(self.accuracy);
        }
        self.hit_at.iter().find(|h| h.0 == k).map(|h| h.1)
    }

    /// Game-vote confusion matrix (true x predicted).
    pub fn game_confusion(&self) -> Vec<Vec<usize>> {
        let pred: Vec<usize> = self.games.iter().map(|g| g.predicted).collect();
        let truth: Vec<usize> = self.games.iter().map(|g| g.truth).collect();
        confusion_matrix(&pred, &truth, self.classes.len())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let pct = |v: f64| format!("{:.2}%", 100.0 * v);
        let _ = writeln!(
            s,
            "# {} ({} samples, {} AP)",
            self.title, self.samples, self.ap_variant
        );
        let width = self
            .classes
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(5);
        let _ = writeln!(s, "{:<width$}  {:>8}", "class", "AP");
        for (c, ap) in self.classes.iter().zip(&self.average_precision) {
            let v = ap.map_or("n/a".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(s, "{c:<width$}  {v:>8}");
        }
        let map = self
            .mean_average_precision
            .map_or("n/a".to_string(), |a| format!("{a:.4}"));
        let _ = writeln!(s, "{:<width$}  {map:>8}", "mAP");
        let _ = writeln!(s);
        let _ = write!(s, "acc {}", pct(self.accuracy));
        for (k, v) in &self.hit_at {
            let _ = write!(s, "  hit@{k} {}", pct(*v));
        }
        if let Some(g) = self.game_accuracy {
            let _ = write!(s, "  game acc {} ({} games)", pct(g), self.games.len());
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "\nconfusion (rows: true, cols: predicted)");
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>5}")).collect();
            let _ = writeln!(s, "{c:<width$} {}", cells.join(""));
        }
        if !self.games.is_empty() {
            let _ = writeln!(s, "\ngame  predicted  true  tie");
            for g in &self.games {
                let _ = writeln!(
                    s,
                    "{:>4}  {:>9}  {:>4}  {}",
                    g.game,
                    self.classes[g.predicted],
                    self.classes[g.truth],
                    if g.tie { "yes" } else { "" }
                );
            }
        }
        s
    }

    /// One JSON object per line: a summary record, then per-class, per-k
    /// and per-game records.
    pub fn to_json_lines(&self) -> String {
        let mut lines = vec![json!({
            "record": "summary",
            "title": self.title,
            "samples": self.samples,
            "ap_variant": self.ap_variant,
            "map": self.mean_average_precision,
            "accuracy": self.accuracy,
            "game_accuracy": self.game_accuracy,
        })];
        for (c, (name, ap)) in self.classes.iter().zip(&self.average_precision).enumerate() {
            lines.push(json!({
                "record": "class", "class": name, "ap": ap,
                "support": self.confusion[c].iter().sum::<usize>(),
                "confusion_row": self.confusion[c],
            }));
        }
        for (k, v) in &self.hit_at {
            lines.push(json!({ "record": "hit_at", "k": k, "value": v }));
        }
        for g in &self.games {
            lines.push(
                json!({ "record": "game", "game": g.game, "predicted": self.classes[g.predicted],
                "truth": self.classes[g.truth], "tie": g.tie, "possessions": g.possessions }),
            );
        }
        lines.iter().map(|l| l.to_string() + "\n").collect()
    }

    /// Writes `<stem>.txt`, `<stem>.jsonl` and one `<stem>.pr.<class>.tsv`
    /// per class with positives.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<PathBuf>, EvalError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let txt = dir.join(format!("{stem}.txt"));
        std::fs::write(&txt, self.to_text())?;
        written.push(txt);
        let jsonl = dir.join(format!("{stem}.jsonl"));
        std::fs::write(&jsonl, self.to_json_lines())?;
        written.push(jsonl);
        for (name, curve) in self.classes.iter().zip(&self.pr_curves) {
            if let Some(curve) = curve {
                let path = dir.join(format!("{stem}.pr.{name}.tsv"));
                let mut body = String::from("recall\tprecision\n");
                for (r, p) in curve {
                    let _ = writeln!(body, "{r}\t{p}");
                }
                std::fs::write(&path, body)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}
