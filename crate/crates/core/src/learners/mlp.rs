//! One-hidden-layer perceptron (ReLU → softmax) trained with Adam on mean
//! cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 100,
            batch_size: 16,
            hidden: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Weights are row-major: `w1` is `hidden × inputs`, `w2` is `classes × hidden`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub n_inputs: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradient of the mean loss, laid out like [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

struct Activations {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl Mlp {
    pub fn zeros(n_inputs: usize, hidden: usize, n_classes: usize) -> Self {
        Self {
            n_inputs,
            hidden,
            n_classes,
            w1: vec![0.0; hidden * n_inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; n_classes * hidden],
            b2: vec![0.0; n_classes],
        }
    }

    /// Uniform Xavier initialization of both weight matrices; zero biases.
    pub fn xavier<R: Rng>(n_inputs: usize, hidden: usize, n_classes: usize, rng: &mut R) -> Self {
        let mut model = Self::zeros(n_inputs, hidden, n_classes);
        let a1 = (6.0 / (n_inputs + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + n_classes) as f64).sqrt();
        model.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..=a1));
        model.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..=a2));
        model
    }

    fn forward(&self, x: &[f64]) -> Activations {
        let mut pre = self.b1.clone();
        for (h, p) in pre.iter_mut().enumerate() {
            let row = &self.w1[h * self.n_inputs..(h + 1) * self.n_inputs];
            *p += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        let hidden: Vec<f64> = pre.iter().map(|&p| p.max(0.0)).collect();
        let mut logits = self.b2.clone();
        for (k, z) in logits.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            *z += row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        }
        Activations {
            pre,
            hidden,
            probs: softmax(&logits),
        }
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).probs
    }

    /// Mean cross-entropy over the given rows.
    pub fn loss(&self, x: &[&[f64]], y: &[usize]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(row, &label)| -self.forward(row).probs[label].max(f64::MIN_POSITIVE).ln())
            .sum();
        total / x.len() as f64
    }

    fn step(&mut self, grads: &Gradients, adam: &mut AdamState, lr: f64, consts: &AdamParams) {
        adam.t += 1;
        let t = adam.t as i32;
        let c1 = 1.0 - consts.beta1.powi(t);
        let c2 = 1.0 - consts.beta2.powi(t);
        let blocks: [(&mut Vec<f64>, &Vec<f64>); 4] = [
            (&mut self.w1, &grads.w1),
            (&mut self.b1, &grads.b1),
            (&mut self.w2, &grads.w2),
            (&mut self.b2, &grads.b2),
        ];
        for ((params, grad), (m, v)) in blocks.into_iter().zip(adam.m.iter_mut().zip(adam.v.iter_mut())) {
            for i in 0..params.len() {
                m[i] = consts.beta1 * m[i] + (1.0 - consts.beta1) * grad[i];
                v[i] = consts.beta2 * v[i] + (1.0 - consts.beta2) * grad[i] * grad[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + consts.epsilon);
            }
        }
    }
}

/// Analytic gradient of the mean cross-entropy over a non-empty batch.
pub fn mlp_gradients(model: &Mlp, x: &[&[f64]], y: &[usize]) -> Gradients {
    let (d, h, k) = (model.n_inputs, model.hidden, model.n_classes);
    let mut g = Gradients {
        w1: vec![0.0; h * d],
        b1: vec![0.0; h],
        w2: vec![0.0; k * h],
        b2: vec![0.0; k],
    };
    let scale = 1.0 / x.len() as f64;
    let mut dhidden = vec![0.0; h];
    for (row, &label) in x.iter().zip(y) {
        let act = model.forward(row);
        dhidden.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..k {
            let dz = (act.probs[c] - if c == label { 1.0 } else { 0.0 }) * scale;
            g.b2[c] += dz;
            for j in 0..h {
                g.w2[c * h + j] += dz * act.hidden[j];
                dhidden[j] += dz * model.w2[c * h + j];
            }
        }
        for j in 0..h {
            if act.pre[j] <= 0.0 {
                continue;
            }
            let dp = dhidden[j];
            g.b1[j] += dp;
            for i in 0..d {
                g.w1[j * d + i] += dp * row[i];
            }
        }
    }
    g
}

struct AdamState {
    t: u64,
    m: [Vec<f64>; 4],
    v: [Vec<f64>; 4],
}

impl AdamState {
    fn new(model: &Mlp) -> Self {
        let zeros = || {
            [
                vec![0.0; model.w1.len()],
                vec![0.0; model.b1.len()],
                vec![0.0; model.w2.len()],
                vec![0.0; model.b2.len()],
            ]
        };
        Self { t: 0, m: zeros(), v: zeros() }
    }
}

/// Trains from a seeded Xavier initialization, reshuffling each epoch.
/// Returns the model and the full-data training loss after every epoch.
pub fn train_mlp(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &MlpParams, seed: u64) -> (Mlp, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_inputs = x.first().map_or(0, Vec::len);
    let mut model = Mlp::xavier(n_inputs, params.hidden, n_classes, &mut rng);
    let consts = AdamParams::default();
    let mut adam = AdamState::new(&model);
    let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut losses = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(params.batch_size.max(1)) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| rows[i]).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let grads = mlp_gradients(&model, &bx, &by);
            model.step(&grads, &mut adam, params.learning_rate, &consts);
        }
        losses.push(model.loss(&rows, y));
    }
    (model, losses)
}
