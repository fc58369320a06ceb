use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Confusion matrix (rows = true class, columns = predicted) and the scores
/// derived from it. Precision, recall and F1 are macro averages over all
/// classes; a class that is never predicted scores precision 0, a class that
/// never occurs scores recall 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassScores>,
}

pub fn compute_metrics(predictions: &[usize], labels: &[usize], n_classes: usize) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Empty("no predictions to score"));
    }
    let mut confusion = vec![vec![0; n_classes]; n_classes];
    for (&p, &t) in predictions.iter().zip(labels) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::Invalid(format!("class index outside {n_classes} classes")));
        }
        confusion[t][p] += 1;
    }
    Ok(metrics_from_confusion(confusion))
}

pub fn metrics_from_confusion(confusion: Vec<Vec<usize>>) -> Metrics {
    let k = confusion.len();
    let n: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let per_class: Vec<ClassScores> = (0..k)
        .map(|c| {
            let tp = confusion[c][c] as f64;
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let support: usize = confusion[c].iter().sum();
            let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
            let recall = if support > 0 { tp / support as f64 } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScores { precision, recall, f1, support }
        })
        .collect();
    let mean = |f: fn(&ClassScores) -> f64| {
        if k == 0 {
            0.0
        } else {
            per_class.iter().map(f).sum::<f64>() / k as f64
        }
    };
    Metrics {
        n,
        accuracy: if n > 0 { correct as f64 / n as f64 } else { 0.0 },
        precision: mean(|c| c.precision),
        recall: mean(|c| c.recall),
        f1: mean(|c| c.f1),
        per_class,
        confusion,
    }
}

/// Element-wise sum of equally sized confusion matrices.
pub fn pool_confusions<'a>(matrices: impl IntoIterator<Item = &'a Vec<Vec<usize>>>, n_classes: usize) -> Vec<Vec<usize>> {
    let mut total = vec![vec![0; n_classes]; n_classes];
    for m in matrices {
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                total[r][c] += v;
            }
        }
    }
    total
}
