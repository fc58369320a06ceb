use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldStrategy {
    /// Class proportions preserved per fold.
    Stratified,
    /// No participant split across folds.
    Grouped,
}

impl fmt::Display for FoldStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FoldStrategy::Stratified => "stratified",
            FoldStrategy::Grouped => "grouped",
        })
    }
}

impl FromStr for FoldStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stratified" => Ok(FoldStrategy::Stratified),
            "grouped" | "participant-grouped" => Ok(FoldStrategy::Grouped),
            other => Err(Error::Invalid(format!("unknown fold strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub strategy: FoldStrategy,
    pub seed: u64,
    /// Fold id of every sample.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Assigns every sample to one of `k` folds.
///
/// Stratified: each class is shuffled and dealt round-robin, the dealing
/// position carrying over from class to class, so fold sizes and per-class
/// counts differ by at most one. Grouped: participants are shuffled, then
/// placed largest-first into the currently smallest fold.
pub fn make_folds(labels: &[usize], groups: &[String], k: usize, strategy: FoldStrategy, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::Invalid(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::Invalid(format!("{n} samples cannot fill {k} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; n];

    match strategy {
        FoldStrategy::Stratified => {
            let n_classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut cursor = 0;
            for class in 0..n_classes {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                members.shuffle(&mut rng);
                for i in members {
                    assignment[i] = cursor % k;
                    cursor += 1;
                }
            }
        }
        FoldStrategy::Grouped => {
            if groups.len() != n {
                return Err(Error::Invalid(format!("{n} samples but {} group ids", groups.len())));
            }
            let mut order: Vec<&str> = Vec::new();
            let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, g) in groups.iter().enumerate() {
                members
                    .entry(g.as_str())
                    .or_insert_with(|| {
                        order.push(g.as_str());
                        Vec::new()
                    })
                    .push(i);
            }
            if order.len() < k {
                return Err(Error::Invalid(format!(
                    "{} participants cannot fill {k} disjoint folds",
                    order.len()
                )));
            }
            order.shuffle(&mut rng);
            order.sort_by_key(|g| std::cmp::Reverse(members[g].len()));
            let mut sizes = vec![0usize; k];
            for g in order {
                let fold = (0..k).min_by_key(|&f| (sizes[f], f)).unwrap_or(0);
                for &i in &members[g] {
                    assignment[i] = fold;
                }
                sizes[fold] += members[g].len();
            }
        }
    }

    Ok(FoldPlan { k, strategy, seed, assignment })
}
