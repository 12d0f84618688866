//! Fully connected Q-network with hand-written backpropagation.
//!
//! All weights and biases live in one flat vector so optimizers and gradient
//! checks can treat the network as a plain parameter array.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Action, Transition, ACTIONS, STATE_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    sizes: Vec<usize>,
    params: Vec<f64>,
    /// Fixed factor on the linear output layer.
    output_scale: f64,
}

impl QNetwork {
    /// Dense ReLU network with layer widths `sizes`, weights and biases drawn
    /// uniformly from `±1/√fan_in`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1] + w[1]).map(|_| rng.gen_range(-bound..bound)));
        }
        Ok(Self { sizes: sizes.to_vec(), params, output_scale: 1.0 })
    }

    /// Multiplies the outputs by `scale`, so parameters of order one can
    /// represent values of order `scale`.
    pub fn with_output_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    /// `5 → 64 → 64 → 9`.
    pub fn dqn<R: Rng + ?Sized>(hidden: usize, rng: &mut R) -> Result<Self> {
        Self::new(&[STATE_DIM, hidden, hidden, ACTIONS], rng)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn outputs(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Copies the parameters of `other` (same architecture).
    pub fn sync_from(&mut self, other: &QNetwork) {
        debug_assert_eq!(self.sizes, other.sizes);
        self.params.copy_from_slice(&other.params);
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().unwrap()
    }

    /// Outputs of every layer, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(x.len(), self.sizes[0], "input width");
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let a = acts.last().unwrap();
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    let s = bias[o] + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>();
                    if l < last {
                        s.max(0.0)
                    } else {
                        s * self.output_scale
                    }
                })
                .collect();
            acts.push(z);
            off += n_in * n_out + n_out;
        }
        acts
    }

    /// Adds `∂(g·out)/∂θ` to `grad`, where `g` is the gradient with respect
    /// to the outputs.
    fn backward(&self, acts: &[Vec<f64>], g_out: &[f64], grad: &mut [f64]) {
        let mut offsets = Vec::with_capacity(self.sizes.len() - 1);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        let mut delta: Vec<f64> = g_out.iter().map(|g| g * self.output_scale).collect();
        for l in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a = &acts[l];
            for o in 0..n_out {
                if delta[o] == 0.0 {
                    continue;
                }
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(a) {
                    *g += delta[o] * x;
                }
                grad[off + n_in * n_out + o] += delta[o];
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[off..off + n_in * n_out];
            delta = (0..n_in)
                .map(|i| {
                    if a[i] <= 0.0 {
                        return 0.0;
                    }
                    (0..n_out).map(|o| weights[o * n_in + i] * delta[o]).sum()
                })
                .collect();
        }
    }
}

pub fn q_forward(net: &QNetwork, state: &[f64]) -> Vec<f64> {
    net.forward(state)
}

/// Mean squared temporal-difference error of `batch` and its gradient with
/// respect to the parameters of `net`. `target` only supplies the bootstrap
/// values and is not differentiated.
pub fn loss_and_gradient(net: &QNetwork, target: &QNetwork, batch: &[Transition], gamma: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; net.params.len()];
    if batch.is_empty() {
        return (0.0, grad);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for tr in batch {
        let next = target.forward(&tr.next_state);
        let y = tr.reward + gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let acts = net.activations(&tr.state);
        let q = acts.last().unwrap()[tr.action.index()];
        let err = y - q;
        loss += err * err * scale;
        let mut g_out = vec![0.0; net.outputs()];
        g_out[tr.action.index()] = -2.0 * err * scale;
        net.backward(&acts, &g_out, &mut grad);
    }
    (loss, grad)
}

/// One optimizer step on `net` over `batch`. Returns the loss before the step.
pub fn q_train_step(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[Transition],
    gamma: f64,
    optimizer: &mut Optimizer,
) -> Result<f64> {
    let (loss, grad) = loss_and_gradient(net, target, batch, gamma);
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("loss {loss} over a batch of {}", batch.len())));
    }
    optimizer.step(&mut net.params, &grad);
    Ok(loss)
}

/// Action with the largest value, lowest index on ties.
pub fn greedy_action(net: &QNetwork, state: &[f64]) -> Action {
    let q = net.forward(state);
    let mut best = 0;
    for (i, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = i;
        }
    }
    Action::ALL[best]
}

/// Uniform random action with probability `epsilon`, greedy otherwise.
pub fn epsilon_greedy<R: Rng + ?Sized>(net: &QNetwork, state: &[f64], epsilon: f64, rng: &mut R) -> Action {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        Action::ALL[rng.gen_range(0..ACTIONS)]
    } else {
        greedy_action(net, state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Gradient-descent update rule with its running state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind) -> Self {
        Self { kind, m: Vec::new(), v: Vec::new(), t: 0 }
    }

    pub fn sgd(lr: f64) -> Self {
        Self::new(OptimizerKind::Sgd { lr })
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                if self.m.len() != params.len() {
                    self.m = vec![0.0; params.len()];
                    self.v = vec![0.0; params.len()];
                    self.t = 0;
                }
                self.t += 1;
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + eps);
                }
            }
        }
    }
}
