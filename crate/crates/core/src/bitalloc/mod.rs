//! Deep-Q-learning search over line-panel bit allocations.
//!
//! A state is a [`BitAllocation`] whose co-phase bits `b_c` always absorb
//! whatever the other four components leave of the budget. Actions move one
//! of the other components by one bit; moves that leave the feasible region
//! are clamped to a no-op.

mod network;

use std::collections::{HashMap, VecDeque};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{BitAllocation, LpGeometry};
use crate::error::{Error, Result};
use crate::evaluate::{ChannelBank, CodebookOptions, MonteCarlo, Quantizer, Scheme, Summary};

pub use network::{
    epsilon_greedy, greedy_action, loss_and_gradient, q_forward, q_train_step, Optimizer, OptimizerKind, QNetwork,
};

pub const STATE_DIM: usize = 5;
pub const ACTIONS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    LpUp,
    LpDown,
    VUp,
    VDown,
    HUp,
    HDown,
    PUp,
    PDown,
    Stay,
}

impl Action {
    pub const ALL: [Action; ACTIONS] = [
        Action::LpUp,
        Action::LpDown,
        Action::VUp,
        Action::VDown,
        Action::HUp,
        Action::HDown,
        Action::PUp,
        Action::PDown,
        Action::Stay,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Component touched and the signed change.
    fn delta(self) -> Option<(usize, i64)> {
        let i = self.index();
        (i < 8).then_some((i / 2, if i.is_multiple_of(2) { 1 } else { -1 }))
    }

    pub fn label(self) -> &'static str {
        ["B_LP+", "B_LP-", "B_v+", "B_v-", "B_h+", "B_h-", "B_p+", "B_p-", "B0"][self.index()]
    }
}

/// Lower bounds on each component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocBounds {
    pub min: BitAllocation,
}

impl AllocBounds {
    /// Never below the standard alphabet sizes: `B_LP ≥ 2`, `B_p ≥ 3`, `B_c ≥ 2`.
    pub const fn standard() -> Self {
        Self { min: BitAllocation::new(2, 0, 0, 3, 2) }
    }

    /// Any non-negative component; allows budgets below the standard minimum.
    pub const fn reduced() -> Self {
        Self { min: BitAllocation::new(0, 0, 0, 0, 0) }
    }
}

impl Default for AllocBounds {
    fn default() -> Self {
        Self::standard()
    }
}

/// The allocation environment for one budget and array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocEnv {
    pub geo: LpGeometry,
    pub budget: u32,
    pub bounds: AllocBounds,
}

impl AllocEnv {
    pub fn new(geo: LpGeometry, budget: u32, bounds: AllocBounds) -> Result<Self> {
        let env = Self { geo, budget, bounds };
        let min = env.minimum_budget();
        if (budget as u64) < min {
            return Err(Error::Config(format!("budget {budget} is below the minimum line-panel report of {min} bits")));
        }
        Ok(env)
    }

    /// Report size of the smallest allowed allocation.
    pub fn minimum_budget(&self) -> u64 {
        self.bounds.min.lp_bits(&self.geo)
    }

    /// `s` with `b_c` set to the largest value that fits the budget, or
    /// `None` when no allowed value fits.
    pub fn fill(&self, s: BitAllocation) -> Option<BitAllocation> {
        let min = self.bounds.min;
        let c = s.components();
        if c.iter().zip(min.components()).take(4).any(|(v, m)| *v < m || *v > self.budget) {
            return None;
        }
        let base = BitAllocation { b_c: 0, ..s };
        let fixed = base.lp_bits(&self.geo);
        let per_bit = BitAllocation { b_c: 1, ..s }.lp_bits(&self.geo) - fixed;
        let budget = self.budget as u64;
        if fixed > budget || per_bit == 0 {
            return None;
        }
        let b_c = ((budget - fixed) / per_bit).min(self.budget as u64) as u32;
        (b_c >= min.b_c).then_some(BitAllocation { b_c, ..s })
    }

    /// Whether `s` is a state of this environment.
    pub fn contains(&self, s: BitAllocation) -> bool {
        self.fill(s) == Some(s)
    }

    /// Standard allocation `{2, 0, 0, 3, ·}`, or the smallest allowed one when
    /// that does not fit.
    pub fn initial_state(&self) -> BitAllocation {
        self.fill(BitAllocation::new(2, 0, 0, 3, 0))
            .or_else(|| self.fill(self.bounds.min))
            .expect("budget admits the minimum allocation")
    }

    pub fn step(&self, s: BitAllocation, a: Action) -> BitAllocation {
        let Some((i, d)) = a.delta() else { return s };
        let mut c = s.components();
        let v = c[i] as i64 + d;
        if v < 0 {
            return s;
        }
        c[i] = v as u32;
        self.fill(BitAllocation::from_components(c)).unwrap_or(s)
    }

    /// Every state, in lexicographic component order.
    pub fn states(&self) -> Vec<BitAllocation> {
        let min = self.bounds.min;
        let mut out = Vec::new();
        let mut c = [min.b_lp, min.b_v, min.b_h, min.b_p, 0];
        // Bits are monotone in every component, so each loop stops at the
        // first value that does not fit.
        loop {
            c[1] = min.b_v;
            loop {
                c[2] = min.b_h;
                loop {
                    c[3] = min.b_p;
                    while let Some(s) = self.fill(BitAllocation::from_components(c)) {
                        out.push(s);
                        c[3] += 1;
                    }
                    if c[3] == min.b_p {
                        break;
                    }
                    c[2] += 1;
                }
                if c[2] == min.b_h {
                    break;
                }
                c[1] += 1;
            }
            if c[1] == min.b_v {
                break;
            }
            c[0] += 1;
        }
        out
    }

    /// Network input: the raw bit counts.
    pub fn features(&self, s: BitAllocation) -> [f64; STATE_DIM] {
        s.components().map(f64::from)
    }
}

pub fn env_step(s: BitAllocation, a: Action, env: &AllocEnv) -> BitAllocation {
    env.step(s, a)
}

/// Reward for reaching a state with average sum-rate `g_next`, given the
/// baseline `g_bar`, the best rate so far `g_max` (already including
/// `g_next`) and the ratio `b` of consecutive report sizes.
pub fn reward(g_next: f64, g_bar: f64, g_max: f64, b: f64, eta: f64) -> Result<f64> {
    if !(g_bar > 0.0 && eta > 0.0) {
        return Err(Error::Domain(format!("baseline {g_bar} and scale {eta} must be positive")));
    }
    if g_next > g_max {
        return Err(Error::Domain(format!("rate {g_next} exceeds the running maximum {g_max}")));
    }
    if g_next == g_max {
        Ok(eta * b * (1.0 + (g_next - g_bar).exp2()))
    } else if g_next >= g_bar {
        Ok(eta * b * (g_next - g_bar).exp2())
    } else {
        let x = b * g_next / g_bar;
        if x.is_nan() || x <= 0.0 {
            return Err(Error::Domain(format!("log of non-positive ratio {x}")));
        }
        Ok(eta * x.log2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: [f64; STATE_DIM],
    pub action: Action,
    pub reward: f64,
    pub next_state: [f64; STATE_DIM],
}

/// First-in first-out experience memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: VecDeque::with_capacity(capacity) }
    }

    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Up to `n` distinct transitions drawn uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Transition> {
        let n = n.min(self.items.len());
        index::sample(rng, self.items.len(), n).into_iter().map(|i| self.items[i]).collect()
    }
}

/// Average sum-rate of an allocation.
pub trait SumRateOracle {
    fn sum_rate(&mut self, alloc: BitAllocation) -> Result<f64>;
}

impl<F: FnMut(BitAllocation) -> Result<f64>> SumRateOracle for F {
    fn sum_rate(&mut self, alloc: BitAllocation) -> Result<f64> {
        self(alloc)
    }
}

/// Monte-Carlo line-panel sum-rate over a fixed channel bank, cached per
/// allocation.
#[derive(Debug, Clone)]
pub struct LpSumRate {
    mc: MonteCarlo,
    bank: ChannelBank,
    opts: CodebookOptions,
    cache: HashMap<BitAllocation, Summary>,
}

impl LpSumRate {
    pub fn new(mc: MonteCarlo, opts: CodebookOptions) -> Result<Self> {
        let bank = mc.channel_bank()?;
        Ok(Self { mc, bank, opts, cache: HashMap::new() })
    }

    pub fn summary(&mut self, alloc: BitAllocation) -> Result<Summary> {
        if let Some(s) = self.cache.get(&alloc) {
            return Ok(*s);
        }
        let q = Quantizer::build(&self.mc.config, &Scheme::Lp { alloc }, &self.opts)?;
        let s = self.mc.run_bank(&self.bank, &[q], &self.opts.search)?[0].summary();
        self.cache.insert(alloc, s);
        Ok(s)
    }

    pub fn evaluated(&self) -> usize {
        self.cache.len()
    }
}

impl SumRateOracle for LpSumRate {
    fn sum_rate(&mut self, alloc: BitAllocation) -> Result<f64> {
        Ok(self.summary(alloc)?.mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnParams {
    /// Reward scale `η`.
    pub eta: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub gamma: f64,
    pub optimizer: OptimizerKind,
    pub hidden: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub max_steps: usize,
    /// Stop after this many steps without a new best rate.
    pub patience: usize,
    /// Steps between target-network updates.
    pub target_sync: usize,
}

impl Default for DqnParams {
    fn default() -> Self {
        Self {
            eta: 1000.0,
            batch_size: 128,
            replay_capacity: 2000,
            gamma: 0.99,
            optimizer: OptimizerKind::adam(0.001),
            hidden: 64,
            epsilon_start: 1.0,
            epsilon_decay: 0.995,
            epsilon_min: 0.05,
            max_steps: 2000,
            patience: 300,
            target_sync: 1,
        }
    }
}

impl DqnParams {
    pub fn validate(&self) -> Result<()> {
        if self.eta.is_nan() || self.eta <= 0.0 {
            return Err(Error::Config("eta must be positive".into()));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.hidden == 0 || self.target_sync == 0 {
            return Err(Error::Config("batch_size, replay_capacity, hidden and target_sync must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("gamma must lie in [0, 1]".into()));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_decay", self.epsilon_decay),
            ("epsilon_min", self.epsilon_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub b_lp: u32,
    pub b_v: u32,
    pub b_h: u32,
    pub b_p: u32,
    pub b_c: u32,
    pub action: &'static str,
    pub reward: f64,
    pub g: f64,
    pub g_max: f64,
    pub epsilon: f64,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub best: BitAllocation,
    pub best_rate: f64,
    pub initial: BitAllocation,
    /// `Ḡ`
    pub baseline_rate: f64,
    /// Best rate after each step.
    pub g_max_trace: Vec<f64>,
    pub log: Vec<LogRow>,
}

/// Runs the agent until the step limit or until the best rate stops
/// improving. Rates come from `oracle`; the agent's randomness from `seed`.
pub fn run_algorithm1(
    env: &AllocEnv,
    oracle: &mut dyn SumRateOracle,
    params: &DqnParams,
    seed: u64,
) -> Result<Training> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // returns are of order η/(1−γ)
    let scale = params.eta / (1.0 - params.gamma).max(1e-2);
    let mut net = QNetwork::dqn(params.hidden, &mut rng)?.with_output_scale(scale);
    let mut target = net.clone();
    let mut opt = Optimizer::new(params.optimizer);
    let mut memory = ReplayBuffer::new(params.replay_capacity);

    let s0 = env.initial_state();
    let g_bar = oracle.sum_rate(s0)?;
    if !(g_bar > 0.0 && g_bar.is_finite()) {
        return Err(Error::Domain(format!("baseline rate {g_bar} must be positive")));
    }
    let (mut best, mut g_max) = (s0, g_bar);
    let mut s = s0;
    let mut epsilon = params.epsilon_start;
    let mut stale = 0;
    let mut trace = Vec::new();
    let mut log = Vec::new();

    for step in 0..params.max_steps {
        let x = env.features(s);
        let a = epsilon_greedy(&net, &x, epsilon, &mut rng);
        let next = env.step(s, a);
        let g = oracle.sum_rate(next)?;
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("sum-rate of {next:?} is {g}")));
        }
        let b = next.lp_bits(&env.geo) as f64 / s.lp_bits(&env.geo) as f64;
        let r = reward(g, g_bar, g_max.max(g), b, params.eta)?;
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("reward {r} at {next:?}")));
        }
        memory.push(Transition { state: x, action: a, reward: r, next_state: env.features(next) });

        let batch = memory.sample(params.batch_size, &mut rng);
        let loss = q_train_step(&mut net, &target, &batch, params.gamma, &mut opt)?;

        s = if g > g_max {
            g_max = g;
            best = next;
            stale = 0;
            s0
        } else {
            stale += 1;
            if g < g_bar / 2.0 {
                s0
            } else {
                next
            }
        };
        if (step + 1) % params.target_sync == 0 {
            target.sync_from(&net);
        }
        log.push(LogRow {
            step,
            b_lp: next.b_lp,
            b_v: next.b_v,
            b_h: next.b_h,
            b_p: next.b_p,
            b_c: next.b_c,
            action: a.label(),
            reward: r,
            g,
            g_max,
            epsilon,
            loss: Some(loss),
        });
        trace.push(g_max);
        epsilon = (epsilon * params.epsilon_decay).max(params.epsilon_min);
        if stale >= params.patience {
            break;
        }
    }
    log::info!("best allocation {best:?} at {g_max:.4} after {} steps (baseline {g_bar:.4})", trace.len());
    Ok(Training { best, best_rate: g_max, initial: s0, baseline_rate: g_bar, g_max_trace: trace, log })
}

#[cfg(test)]
mod tests;
