//! Labeled feature matrix shared by the learners and the evaluation harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    /// Class index per row, `< class_names.len()`.
    pub labels: Vec<usize>,
    /// Participant per row; used for grouped folds.
    pub groups: Vec<String>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn dimension(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Checks row/label/group counts, label range, dimension consistency and finiteness.
    pub fn check(&self) -> Result<()> {
        let n = self.labels.len();
        if self.features.len() != n || self.groups.len() != n {
            return Err(Error::Invalid(format!(
                "dataset has {} rows, {} labels and {} groups",
                self.features.len(),
                n,
                self.groups.len()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.n_classes()) {
            return Err(Error::Invalid(format!("label {bad} outside {} classes", self.n_classes())));
        }
        let dim = self.dimension();
        for row in &self.features {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dataset features".into()));
            }
        }
        Ok(())
    }

    /// Row counts per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Most frequent class, lowest index on ties.
    pub fn majority_class(&self) -> usize {
        crate::argmax_counts(&self.class_counts())
    }
}
