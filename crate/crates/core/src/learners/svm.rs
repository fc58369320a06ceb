//! C-SVM with an RBF kernel, trained by sequential minimal optimization.
//!
//! The dual is solved in its minimization form
//! `f(α) = ½ αᵀQα − Σα`, `Q_ij = y_i y_j K_ij`, subject to `0 ≤ α ≤ C` and
//! `Σ y_i α_i = 0`. Each iteration picks the maximal violating pair and
//! solves the two-variable subproblem analytically. More than two classes are
//! handled one-vs-rest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (d · var(X))` over all training entries; 1 when the variance is 0.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Bias of the decision function `Σ α_i y_i K(x_i, x) + b`.
    pub b: f64,
    /// Dual objective `Σα − ½ αᵀQα` after every iteration (first entry at α = 0).
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Maximal KKT violation `m(α) − M(α)` at exit.
    pub violation: f64,
}

impl SmoSolution {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

/// Dual objective `Σα − ½ αᵀQα` for labels in {−1, +1}.
pub fn dual_objective(kernel: &[Vec<f64>], labels: &[f64], alpha: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..alpha.len() {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..alpha.len() {
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * kernel[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Maximal violating pair `(i, j, m − M)` under the current gradient.
fn select_pair(labels: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> Option<(usize, usize, f64)> {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let v = -labels[t] * grad[t];
        if in_up(labels[t], alpha[t], c) && up.is_none_or(|(_, best)| v > best) {
            up = Some((t, v));
        }
        if in_low(labels[t], alpha[t], c) && low.is_none_or(|(_, best)| v < best) {
            low = Some((t, v));
        }
    }
    match (up, low) {
        (Some((i, m)), Some((j, lm))) => Some((i, j, m - lm)),
        _ => None,
    }
}

fn bias(labels: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = labels[t] * grad[t];
        if alpha[t] >= c {
            if labels[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if labels[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    -rho
}

/// Solves the SVM dual for a precomputed kernel matrix and ±1 labels.
///
/// Stops once the maximal KKT violation drops below `tol`; after `max_iter`
/// iterations returns [`Error::SmoNotConverged`] carrying the last iterate.
pub fn smo_solve(kernel: &[Vec<f64>], labels: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<SmoSolution> {
    let n = labels.len();
    if kernel.len() != n || kernel.iter().any(|row| row.len() != n) {
        return Err(Error::Invalid("kernel matrix must be n × n".into()));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Invalid("SMO labels must be ±1".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Invalid(format!("C must be positive, got {c}")));
    }

    let q = |i: usize, j: usize| labels[i] * labels[j] * kernel[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    // f = ½ αᵀ(G − e) when G = Qα − e; the dual objective is −f.
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    };
    let mut trace = vec![0.0];
    let mut iterations = 0;
    let mut violation;

    loop {
        let Some((i, j, gap)) = select_pair(labels, &alpha, &grad, c) else {
            violation = 0.0;
            break;
        };
        violation = gap;
        if gap < tol {
            break;
        }
        if iterations >= max_iter {
            let best = SmoSolution {
                b: bias(labels, &alpha, &grad, c),
                alpha,
                objective_trace: trace,
                iterations,
                violation,
            };
            return Err(Error::SmoNotConverged {
                iterations,
                violation,
                best: Box::new(best),
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (kernel[i][i], kernel[j][j], q(i, j));
        if labels[i] != labels[j] {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += q(i, k) * di + q(j, k) * dj;
        }
        trace.push(objective(&alpha, &grad));
    }

    Ok(SmoSolution {
        b: bias(labels, &alpha, &grad, c),
        alpha,
        objective_trace: trace,
        iterations,
        violation,
    })
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(0, Vec::len);
    let count = (x.len() * d) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// One binary machine; `positive` vs. everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i` of each support vector.
    pub alpha: Vec<f64>,
    /// `y_i ∈ {−1, +1}` of each support vector.
    pub labels: Vec<f64>,
    pub b: f64,
}

impl BinaryMachine {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(self.alpha.iter().zip(&self.labels))
            .map(|(sv, (a, y))| a * y * rbf(sv, x, gamma))
            .sum::<f64>()
            + self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub n_features: usize,
    pub n_classes: usize,
    pub c: f64,
    pub gamma: f64,
    /// One machine (class 1 positive) for two classes, otherwise one per class.
    pub machines: Vec<BinaryMachine>,
}

impl SvmModel {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &SvmParams) -> Result<Self> {
        let gamma = match params.gamma {
            Gamma::Scale => scale_gamma(x),
            Gamma::Value(g) => g,
        };
        let n = x.len();
        let kernel: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| rbf(&x[i], &x[j], gamma)).collect())
            .collect();

        let positives: Vec<usize> = if n_classes == 2 { vec![1] } else { (0..n_classes).collect() };
        let machines = positives
            .into_iter()
            .map(|positive| {
                let labels: Vec<f64> = y.iter().map(|&l| if l == positive { 1.0 } else { -1.0 }).collect();
                if labels.iter().all(|&l| l < 0.0) {
                    // Class absent from this training set: never the positive side.
                    return Ok(BinaryMachine {
                        positive,
                        support_vectors: Vec::new(),
                        alpha: Vec::new(),
                        labels: Vec::new(),
                        b: -1.0,
                    });
                }
                let sol = smo_solve(&kernel, &labels, params.c, params.tol, params.max_iter)?;
                let support: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
                Ok(BinaryMachine {
                    positive,
                    support_vectors: support.iter().map(|&i| x[i].clone()).collect(),
                    alpha: support.iter().map(|&i| sol.alpha[i]).collect(),
                    labels: support.iter().map(|&i| labels[i]).collect(),
                    b: sol.b,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            n_features: x.first().map_or(0, Vec::len),
            n_classes,
            c: params.c,
            gamma,
            machines,
        })
    }

    /// Per-class decision values; for two classes `[−f(x), f(x)]`.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 {
            let f = self.machines[0].decision(x, self.gamma);
            return vec![-f, f];
        }
        self.machines.iter().map(|m| m.decision(x, self.gamma)).collect()
    }
}
