//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls into the code under test except to
//! read its outputs.

#![allow(dead_code)]

use std::collections::HashMap;

use longicog::learners::mlp::{mlp_gradients, Mlp};
use longicog::learners::tree::{DecisionTree, Node};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gini_of(labels: &[usize], n_classes: usize) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0.0; n_classes];
    for &l in labels {
        counts[l] += 1.0;
    }
    let n = labels.len() as f64;
    1.0 - counts.iter().map(|c: &f64| (c / n) * (c / n)).sum::<f64>()
}

/// Weighted child impurity of splitting `rows` at `x[feature] <= threshold`.
fn split_impurity(x: &[Vec<f64>], y: &[usize], rows: &[usize], feature: usize, threshold: f64, n_classes: usize) -> Option<f64> {
    let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x[r][feature] <= threshold);
    if left.is_empty() || right.is_empty() {
        return None;
    }
    let yl: Vec<usize> = left.iter().map(|&r| y[r]).collect();
    let yr: Vec<usize> = right.iter().map(|&r| y[r]).collect();
    let n = rows.len() as f64;
    Some((yl.len() as f64 * gini_of(&yl, n_classes) + yr.len() as f64 * gini_of(&yr, n_classes)) / n)
}

/// Lowest weighted impurity over every feature and every threshold placed
/// between two consecutive distinct values; `None` if no split separates.
pub fn exhaustive_best_split(x: &[Vec<f64>], y: &[usize], rows: &[usize], n_classes: usize) -> Option<f64> {
    let d = x.first().map_or(0, Vec::len);
    let mut best: Option<f64> = None;
    for f in 0..d {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            // Any threshold in [lo, hi) induces the same partition.
            if let Some(imp) = split_impurity(x, y, rows, f, w[0], n_classes) {
                best = Some(best.map_or(imp, |b: f64| b.min(imp)));
            }
        }
    }
    best
}

/// Best achievable training accuracy: each distinct feature vector predicts
/// its most frequent label.
pub fn group_majority_accuracy(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> f64 {
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (row, &label) in x.iter().zip(y) {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        groups.entry(key).or_insert_with(|| vec![0; n_classes])[label] += 1;
    }
    let correct: usize = groups.values().map(|c| *c.iter().max().unwrap()).sum();
    correct as f64 / y.len() as f64
}

/// Checks a fully grown tree against exhaustive split search: every split is
/// a minimum-impurity split of the rows reaching it, every impure leaf has no
/// separating split, and training accuracy equals the group-majority optimum.
pub fn check_tree(tree: &DecisionTree, x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<(), String> {
    let mut reach: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    for r in 0..x.len() {
        let mut at = 0;
        loop {
            reach[at].push(r);
            match &tree.nodes[at] {
                Node::Leaf { .. } => break,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[r][*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
    for (id, node) in tree.nodes.iter().enumerate() {
        let rows = &reach[id];
        let best = exhaustive_best_split(x, y, rows, n_classes);
        match node {
            Node::Split { feature, threshold, .. } => {
                let chosen = split_impurity(x, y, rows, *feature, *threshold, n_classes)
                    .ok_or_else(|| format!("node {id}: split does not separate its rows"))?;
                let best = best.ok_or_else(|| format!("node {id}: split where none exists"))?;
                if (chosen - best).abs() > 1e-12 {
                    return Err(format!("node {id}: impurity {chosen} but exhaustive best is {best}"));
                }
            }
            Node::Leaf { .. } => {
                let labels: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
                let pure = labels.windows(2).all(|w| w[0] == w[1]);
                if !pure && rows.len() >= 2 && best.is_some() {
                    return Err(format!("node {id}: impure leaf although a split exists"));
                }
            }
        }
    }
    let correct = x.iter().zip(y).filter(|(row, &l)| tree.predict_class(row) == l).count();
    let acc = correct as f64 / y.len() as f64;
    let optimum = group_majority_accuracy(x, y, n_classes);
    if (acc - optimum).abs() > 1e-12 {
        return Err(format!("training accuracy {acc} but exhaustive optimum is {optimum}"));
    }
    Ok(())
}

/// Seeded classification set of at most 32 points in at most 4 dimensions.
/// Values come from a coarse grid so duplicates and tied thresholds occur.
pub fn small_dataset(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=32);
    let d = rng.gen_range(1..=4);
    let n_classes = rng.gen_range(2..=3);
    let grid = rng.gen_range(2..=6);
    let x = (0..n)
        .map(|_| (0..d).map(|_| f64::from(rng.gen_range(0..grid)) * 0.5).collect())
        .collect();
    let y = (0..n).map(|_| rng.gen_range(0..n_classes)).collect();
    (x, y, n_classes)
}

/// Seeded kernel problem with at most 6 points and both labels present.
pub fn small_svm_problem(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let d = rng.gen_range(1..=3);
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let mut labels: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    labels[0] = 1.0;
    labels[1] = -1.0;
    let gamma = rng.gen_range(0.1..2.0);
    let c = [0.1, 0.5, 1.0, 10.0][rng.gen_range(0..4)];
    let kernel = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| (-gamma * a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()).exp())
                .collect()
        })
        .collect();
    (kernel, labels, c)
}

/// Solves `A z = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * z[k]).sum();
        z[row] = (b[row] - tail) / a[row][row];
    }
    Some(z)
}

fn dual_value(kernel: &[Vec<f64>], labels: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * kernel[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Maximum of the SVM dual over `0 ≤ α ≤ C`, `yᵀα = 0`, by enumerating
/// every assignment of each α to {0, C, free} and solving the KKT system
/// of the free block exactly. Exponential; meant for n ≤ 8.
pub fn brute_force_dual(kernel: &[Vec<f64>], labels: &[f64], c: f64) -> f64 {
    let n = labels.len();
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let q = |i: usize, j: usize| labels[i] * labels[j] * kernel[i][j];

        if !free.is_empty() {
            // Stationarity on the free block plus the equality constraint.
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (k, &j) in free.iter().enumerate() {
                    a[r][k] = q(i, j);
                }
                a[r][m] = labels[i];
                let fixed: f64 = (0..n).filter(|&j| state[j] != 2).map(|j| q(i, j) * alpha[j]).sum();
                rhs[r] = 1.0 - fixed;
                a[m][r] = labels[i];
            }
            rhs[m] = -(0..n).filter(|&j| state[j] != 2).map(|j| labels[j] * alpha[j]).sum::<f64>();
            let Some(z) = solve_linear(a, rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = z[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-12..=c + 1e-12).contains(&a))
            && labels.iter().zip(&alpha).map(|(y, a)| y * a).sum::<f64>().abs() < 1e-9;
        if feasible {
            best = best.max(dual_value(kernel, labels, &alpha));
        }
    }
    best
}

/// Largest relative deviation between analytic and central-difference
/// gradients, over every parameter, for one seeded random configuration.
/// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(seed: u64, step: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_inputs = rng.gen_range(1..=6);
    let hidden = rng.gen_range(1..=8);
    let n_classes = rng.gen_range(2..=4);
    let batch = rng.gen_range(1..=5);
    let mut model = Mlp::xavier(n_inputs, hidden, n_classes, &mut rng);
    for b in model.b1.iter_mut().chain(model.b2.iter_mut()) {
        *b = rng.gen_range(-0.5..0.5);
    }
    let xs: Vec<Vec<f64>> = (0..batch)
        .map(|_| (0..n_inputs).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let ys: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..n_classes)).collect();
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();

    let analytic = mlp_gradients(&model, &refs, &ys);
    let flat = [analytic.w1, analytic.b1, analytic.w2, analytic.b2].concat();

    let mut worst: f64 = 0.0;
    let sizes = [model.w1.len(), model.b1.len(), model.w2.len(), model.b2.len()];
    let mut offset = 0;
    for (block, &size) in sizes.iter().enumerate() {
        for k in 0..size {
            let perturbed = |delta: f64| {
                let mut m = model.clone();
                let p = match block {
                    0 => &mut m.w1,
                    1 => &mut m.b1,
                    2 => &mut m.w2,
                    _ => &mut m.b2,
                };
                p[k] += delta;
                m.loss(&refs, &ys)
            };
            let numeric = (perturbed(step) - perturbed(-step)) / (2.0 * step);
            let a = flat[offset + k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        offset += size;
    }
    worst
}

/// A hand-computed confusion matrix (rows = true class) and its scores.
pub struct MetricFixture {
    pub name: &'static str,
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn metric_fixtures() -> Vec<MetricFixture> {
    let fx = |name, confusion, accuracy, precision, recall, f1| MetricFixture {
        name,
        confusion,
        accuracy,
        precision,
        recall,
        f1,
    };
    vec![
        fx("perfect binary", vec![vec![5, 0], vec![0, 5]], 1.0, 1.0, 1.0, 1.0),
        fx("majority 60/40", vec![vec![6, 0], vec![4, 0]], 0.6, 0.3, 0.5, 0.375),
        fx("all wrong", vec![vec![0, 3], vec![2, 0]], 0.0, 0.0, 0.0, 0.0),
        fx(
            "absent class never predicted",
            vec![vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 0]],
            1.0,
            2.0 / 3.0,
            2.0 / 3.0,
            2.0 / 3.0,
        ),
        fx(
            "absent class predicted",
            vec![vec![3, 0, 1], vec![0, 2, 0], vec![0, 0, 0]],
            5.0 / 6.0,
            2.0 / 3.0,
            7.0 / 12.0,
            13.0 / 21.0,
        ),
        fx(
            "imbalanced binary",
            vec![vec![8, 2], vec![1, 4]],
            0.8,
            7.0 / 9.0,
            0.8,
            164.0 / 209.0,
        ),
        fx(
            "three-class mixed",
            vec![vec![2, 0, 1], vec![0, 1, 2], vec![1, 1, 6]],
            9.0 / 14.0,
            11.0 / 18.0,
            7.0 / 12.0,
            452.0 / 765.0,
        ),
        fx(
            "three-class majority",
            vec![vec![0, 0, 2], vec![0, 0, 3], vec![0, 0, 5]],
            0.5,
            1.0 / 6.0,
            1.0 / 3.0,
            2.0 / 9.0,
        ),
        fx("single sample", vec![vec![0, 0], vec![0, 1]], 1.0, 0.5, 0.5, 0.5),
        fx("symmetric binary", vec![vec![3, 1], vec![1, 3]], 0.75, 0.75, 0.75, 0.75),
    ]
}
