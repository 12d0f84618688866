//! Codeword selection: `argmax_i |hᴴ c_i|` over each codebook family.
//!
//! Every strategy returns the index an exhaustive scan in enumeration order
//! would return, ties going to the lowest index. Exhaustive scans refuse to
//! run past the evaluation cap; the pruned strategy is exact at any size.

mod pruned;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{Codeword, DftCodebook, LpCodebook, PaSearch, TypeIiCodebook};
use crate::error::{Error, Result};

pub use crate::codebook::lp::assemble_lp;

/// Default limit on codeword evaluations for exhaustive scans.
pub const DEFAULT_EVALUATION_CAP: u64 = 1 << 20;

/// Scans larger than this are split across threads.
const PARALLEL_CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Score every codeword; fails when the codebook exceeds the cap.
    Exhaustive,
    /// Branch-and-bound over rotation offsets and closed-form panel phases.
    Pruned,
    /// Exhaustive up to the cap, pruned beyond it.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    pub strategy: Strategy,
    pub evaluation_cap: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { strategy: Strategy::Auto, evaluation_cap: DEFAULT_EVALUATION_CAP }
    }
}

impl SearchOptions {
    pub fn exhaustive(cap: u64) -> Self {
        Self { strategy: Strategy::Exhaustive, evaluation_cap: cap }
    }

    pub fn pruned() -> Self {
        Self { strategy: Strategy::Pruned, ..Self::default() }
    }

    fn use_exhaustive(&self, size: u128) -> Result<bool> {
        match self.strategy {
            Strategy::Pruned => Ok(false),
            Strategy::Auto => Ok(size <= self.evaluation_cap as u128),
            Strategy::Exhaustive if size > self.evaluation_cap as u128 => {
                Err(Error::SearchBudgetExceeded { required: size, cap: self.evaluation_cap })
            }
            Strategy::Exhaustive => Ok(true),
        }
    }
}

/// `hᴴ c`.
pub fn inner(h: &[Complex64], c: &[Complex64]) -> Complex64 {
    h.iter().zip(c).map(|(a, b)| a.conj() * b).sum()
}

/// `|hᴴ c| / (‖h‖‖c‖)`, zero for a zero channel.
pub fn alignment(h: &[Complex64], c: &[Complex64]) -> f64 {
    let nh = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nc = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if nh == 0.0 || nc == 0.0 {
        return 0.0;
    }
    (inner(h, c).norm() / (nh * nc)).min(1.0)
}

/// Scores within this fraction of `‖h‖` of the maximum count as ties.
/// Collinear codewords (equal up to a common phase) score identically in
/// exact arithmetic but not in floating point; treating them as ties keeps
/// the chosen index independent of channel scaling and scan order.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Best codeword of one search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Found {
    pub index: u64,
    pub score: f64,
    pub evaluations: u64,
}

/// Order-independent argmax: the lowest index whose score is within the tie
/// tolerance of the maximum.
#[derive(Debug, Clone)]
pub(crate) struct Argmax {
    tol: f64,
    max: f64,
    near: Vec<(u64, f64)>,
    evaluations: u64,
}

impl Argmax {
    pub(crate) fn new(h: &[Complex64]) -> Self {
        let norm = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        Self { tol: TIE_TOLERANCE * norm, max: f64::NEG_INFINITY, near: Vec::new(), evaluations: 0 }
    }

    pub(crate) fn max(&self) -> f64 {
        self.max
    }

    pub(crate) fn offer(&mut self, index: u64, score: f64) {
        self.evaluations += 1;
        self.insert(index, score);
    }

    fn insert(&mut self, index: u64, score: f64) {
        if score > self.max {
            self.max = score;
            let floor = score - self.tol;
            self.near.retain(|c| c.1 >= floor);
        }
        if score >= self.max - self.tol {
            self.near.push((index, score));
        }
    }

    fn merge(mut self, other: Argmax) -> Argmax {
        self.evaluations += other.evaluations;
        for (i, s) in other.near {
            self.insert(i, s);
        }
        self
    }

    pub(crate) fn finish(self) -> Option<Found> {
        let floor = self.max - self.tol;
        self.near.iter().filter(|c| c.1 >= floor).min_by_key(|c| c.0).map(|&(index, score)| Found {
            index,
            score,
            evaluations: self.evaluations,
        })
    }
}

/// Deterministic argmax over `0..len`, scanned in parallel chunks.
fn scan(h: &[Complex64], len: u64, visit: impl Fn(std::ops::Range<u64>, &mut Argmax) + Sync) -> Option<Found> {
    let run = |r: std::ops::Range<u64>| {
        let mut acc = Argmax::new(h);
        visit(r, &mut acc);
        acc
    };
    if len <= PARALLEL_CHUNK {
        return run(0..len).finish();
    }
    let chunks = len.div_ceil(PARALLEL_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| run(c * PARALLEL_CHUNK..((c + 1) * PARALLEL_CHUNK).min(len)))
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(Argmax::merge)
        .and_then(Argmax::finish)
}

/// Result of quantizing one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult {
    /// Unit-norm codeword in port order.
    pub codeword: Codeword,
    /// Chosen index per line panel (one entry for single-codebook families).
    pub indices: Vec<u64>,
    /// Phase index per line panel `2..M`.
    pub pa_phases: Vec<u64>,
    pub alignment: f64,
    pub evaluations: u64,
}

fn check_len(h: &[Complex64], expected: usize) -> Result<()> {
    if h.len() != expected {
        return Err(Error::Shape(format!("channel of length {}, codebook expects {expected}", h.len())));
    }
    Ok(())
}

/// Best Type-II codeword for `h`.
pub fn search_type_ii(h: &[Complex64], cb: &TypeIiCodebook, opts: &SearchOptions) -> Result<Found> {
    check_len(h, cb.dim())?;
    if cb.is_empty() {
        return Err(Error::Config("empty codebook".into()));
    }
    if !opts.use_exhaustive(cb.len())? {
        return pruned::type_ii(h, cb);
    }
    let len = cb.len() as u64;
    Ok(scan(h, len, |r, acc| cb.for_each_in(r, |i, c| acc.offer(i, inner(h, c).norm()))).expect("non-empty codebook"))
}

/// Single line-panel quantization: index and codeword.
pub fn quantize_slp(slice: &[Complex64], cb: &TypeIiCodebook, opts: &SearchOptions) -> Result<(Found, Codeword)> {
    let f = search_type_ii(slice, cb, opts)?;
    Ok((f, cb.codeword_at(f.index)?))
}

/// Single-panel Type-II quantization of the whole array.
pub fn quantize_sp(h: &[Complex64], cb: &TypeIiCodebook, opts: &SearchOptions) -> Result<QuantizationResult> {
    let (f, codeword) = quantize_slp(h, cb, opts)?;
    let alignment = alignment(h, &codeword.vector);
    Ok(QuantizationResult {
        codeword,
        indices: vec![f.index],
        pa_phases: Vec::new(),
        alignment,
        evaluations: f.evaluations,
    })
}

/// DFT-baseline quantization.
pub fn quantize_dft(h: &[Complex64], cb: &DftCodebook, opts: &SearchOptions) -> Result<QuantizationResult> {
    check_len(h, cb.dim())?;
    let f = if opts.use_exhaustive(cb.len() as u128)? {
        let (_, gh) = cb.grid_size();
        scan(h, cb.len(), |r, acc| {
            for i in r {
                acc.offer(i, inner(h, &cb.vector(i / gh, i % gh)).norm());
            }
        })
        .expect("non-empty codebook")
    } else {
        pruned::dft(h, cb)?
    };
    let codeword = cb.codeword_at(f.index)?;
    let alignment = alignment(h, &codeword.vector);
    Ok(QuantizationResult {
        codeword,
        indices: vec![f.index],
        pa_phases: Vec::new(),
        alignment,
        evaluations: f.evaluations,
    })
}

/// Two-stage line-panel quantization.
///
/// Stage one quantizes every line panel on its own. Stage two picks the
/// panel phases: sequentially (panel `m` against the panels before it, later
/// panels unrotated) or jointly over all phase vectors.
pub fn quantize_lp(h: &[Complex64], cb: &LpCodebook, opts: &SearchOptions) -> Result<QuantizationResult> {
    let layout = cb.layout();
    check_len(h, layout.port_count())?;
    let mut evaluations = 0u64;
    let mut indices = Vec::with_capacity(layout.line_panels);
    let mut panels = Vec::with_capacity(layout.line_panels);
    for m in 0..layout.line_panels {
        let (f, cw) = quantize_slp(&layout.slice(h, m)?, cb.slp(), opts)?;
        evaluations += f.evaluations;
        indices.push(f.index);
        panels.push(cw.vector);
    }
    let h_line = layout.to_line_order(h)?;
    let pa = cb.pa();
    let evaluate = |phases: &[u64]| -> Result<f64> {
        let phasors: Vec<Complex64> = phases.iter().map(|&p| pa.phasor(p)).collect();
        Ok(inner(&h_line, &assemble_lp(&panels, &phasors)?).norm())
    };
    let extra = layout.line_panels.saturating_sub(1);
    let mut phases = vec![0u64; extra];
    match cb.pa_search() {
        PaSearch::Sequential => {
            let q = pa.alphabet_len();
            let exhaustive = opts.use_exhaustive(pa.len() as u128)? || q <= 8;
            // g_m = h_mᴴ h̄_m, the per-panel contributions to the score
            let g: Vec<Complex64> = (0..layout.line_panels)
                .map(|m| inner(&h_line[m * layout.slice_len()..(m + 1) * layout.slice_len()], &panels[m]))
                .collect();
            for m in 1..layout.line_panels {
                let candidates: Vec<u64> = if exhaustive {
                    (0..q).collect()
                } else {
                    let fixed: Complex64 = g[0]
                        + (1..m).map(|l| pa.phasor(phases[l - 1]) * g[l]).sum::<Complex64>()
                        + g[m + 1..].iter().sum::<Complex64>();
                    let theta = fixed.arg() - g[m].arg();
                    let k = (theta / std::f64::consts::TAU * q as f64).floor() as i64;
                    let mut c: Vec<u64> = (-1..=2).map(|d| (k + d).rem_euclid(q as i64) as u64).collect();
                    c.sort_unstable();
                    c.dedup();
                    c
                };
                let mut acc = Argmax::new(h);
                for k in candidates {
                    phases[m - 1] = k;
                    acc.offer(k, evaluate(&phases)?);
                }
                let f = acc.finish().expect("non-empty alphabet");
                evaluations += f.evaluations;
                phases[m - 1] = f.index;
            }
        }
        PaSearch::Joint => {
            let q = pa.alphabet_len() as u128;
            let total = q.checked_pow(extra as u32).unwrap_or(u128::MAX);
            if extra > 0 {
                if total > opts.evaluation_cap as u128 {
                    return Err(Error::SearchBudgetExceeded { required: total, cap: opts.evaluation_cap });
                }
                let digits = |i: u64| {
                    let mut rest = i;
                    let mut trial = vec![0u64; extra];
                    for t in trial.iter_mut().rev() {
                        *t = rest % q as u64;
                        rest /= q as u64;
                    }
                    trial
                };
                let mut acc = Argmax::new(h);
                for i in 0..total as u64 {
                    acc.offer(i, evaluate(&digits(i))?);
                }
                let f = acc.finish().expect("non-empty alphabet");
                evaluations += f.evaluations;
                phases = digits(f.index);
            }
        }
    }
    let slp = cb.slp();
    let idx = indices.iter().map(|&i| slp.decode(i)).collect::<Result<Vec<_>>>()?;
    let codeword = cb.codeword(&idx, &phases)?;
    let alignment = alignment(h, &codeword.vector);
    Ok(QuantizationResult { codeword, indices, pa_phases: phases, alignment, evaluations })
}
