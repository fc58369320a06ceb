//! CART classification tree: binary splits on single features, Gini impurity.
//!
//! Nodes are grown until pure, until fewer than `min_samples_split` samples
//! remain, or until no feature separates the node's samples. A split is taken
//! whenever it does not increase weighted impurity; zero-gain splits are
//! allowed so XOR-like nodes still get resolved one level further down.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        distribution: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub n_classes: usize,
    /// Arena; node 0 is the root.
    pub nodes: Vec<Node>,
}

/// `1 - Σ p_c²` for class counts.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Restricts the features examined at each node. Forests use this to draw a
/// random subset per split.
pub(crate) struct FeatureSampler<'a, R: Rng> {
    pub rng: &'a mut R,
    pub per_split: usize,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &TreeParams) -> Self {
        let rows: Vec<usize> = (0..y.len()).collect();
        Self::fit_rows::<rand_chacha::ChaCha8Rng>(x, y, &rows, n_classes, params, None)
    }

    /// Grows a tree on the (possibly repeated) row indices `rows`.
    pub(crate) fn fit_rows<R: Rng>(
        x: &[Vec<f64>],
        y: &[usize],
        rows: &[usize],
        n_classes: usize,
        params: &TreeParams,
        mut sampler: Option<FeatureSampler<'_, R>>,
    ) -> Self {
        let n_features = x.first().map_or(0, Vec::len);
        let mut nodes = vec![Node::Leaf { distribution: Vec::new() }];
        let mut stack = vec![(0usize, rows.to_vec())];

        while let Some((slot, members)) = stack.pop() {
            let counts = class_counts(y, &members, n_classes);
            let impure = counts.iter().filter(|&&c| c > 0).count() > 1;
            let split = if impure && members.len() >= params.min_samples_split.max(2) {
                best_split(x, y, &members, n_classes, &counts, sampler.as_mut())
            } else {
                None
            };
            match split {
                Some(choice) => {
                    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                        members.iter().partition(|&&r| x[r][choice.feature] <= choice.threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf { distribution: Vec::new() });
                    nodes.push(Node::Leaf { distribution: Vec::new() });
                    nodes[slot] = Node::Split {
                        feature: choice.feature,
                        threshold: choice.threshold,
                        left,
                        right,
                    };
                    stack.push((right, right_rows));
                    stack.push((left, left_rows));
                }
                None => {
                    let n = members.len() as f64;
                    nodes[slot] = Node::Leaf {
                        distribution: counts.iter().map(|&c| c as f64 / n).collect(),
                    };
                }
            }
        }

        Self { n_features, n_classes, nodes }
    }

    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { distribution } => return distribution,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        argmax(self.leaf(x))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

fn class_counts(y: &[usize], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

fn best_split<R: Rng>(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    n_classes: usize,
    totals: &[usize],
    sampler: Option<&mut FeatureSampler<'_, R>>,
) -> Option<SplitChoice> {
    let n_features = x[rows[0]].len();
    let (order, budget): (Vec<usize>, usize) = match sampler {
        Some(s) => {
            let mut order: Vec<usize> = (0..n_features).collect();
            order.shuffle(s.rng);
            (order, s.per_split.clamp(1, n_features.max(1)))
        }
        None => ((0..n_features).collect(), n_features),
    };

    let parent = gini(totals);
    let n = rows.len() as f64;
    let mut best: Option<SplitChoice> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(rows.len());

    // Keep drawing features past the budget until one actually separates the node.
    for (examined, &feature) in order.iter().enumerate() {
        if examined >= budget && best.is_some() {
            break;
        }
        column.clear();
        column.extend(rows.iter().map(|&r| (x[r][feature], y[r])));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = vec![0usize; n_classes];
        for i in 1..column.len() {
            left[column[i - 1].1] += 1;
            let (lo, hi) = (column[i - 1].0, column[i].0);
            if lo >= hi {
                continue;
            }
            let right: Vec<usize> = totals.iter().zip(&left).map(|(t, l)| t - l).collect();
            let nl = i as f64;
            let impurity = (nl * gini(&left) + (n - nl) * gini(&right)) / n;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitChoice { feature, threshold, impurity });
            }
        }
    }
    best.filter(|b| b.impurity <= parent + 1e-12)
}
