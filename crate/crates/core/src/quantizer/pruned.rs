//! Exact branch-and-bound over rotation grids.
//!
//! For a fixed beam selection the inner product between the channel and a
//! beam is a trigonometric polynomial in the rotation offsets. Over a box of
//! offsets its magnitude is bounded by a first-order expansion at the box
//! centre (maximal at a corner, by convexity) plus a second-order remainder.
//! Boxes whose bound falls below the best canonical score found so far are
//! discarded; surviving grid points are scored canonically, so the result is
//! the same index an exhaustive scan would return.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{inner, Argmax, Found};
use crate::codebook::beams::{combine, Rotation};
use crate::codebook::{CoefficientIndex, DftCodebook, TypeIiCodebook, TypeIiIndex};
use crate::error::Result;

/// Relative slack that absorbs rounding differences between bounds and
/// canonical scores.
const MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Span {
    x0: u64,
    x1: u64,
    y0: u64,
    y1: u64,
}

impl Span {
    fn center(&self) -> (f64, f64) {
        (self.x0 as f64 + (self.x1 - self.x0) as f64 / 2.0, self.y0 as f64 + (self.y1 - self.y0) as f64 / 2.0)
    }

    fn half(&self) -> (f64, f64) {
        ((self.x1 - self.x0) as f64 / 2.0, (self.y1 - self.y0) as f64 / 2.0)
    }

    fn is_point(&self) -> bool {
        self.x0 == self.x1 && self.y0 == self.y1
    }

    /// Halves the dimension along which the phase spread is larger.
    fn split(&self, spread_x: f64, spread_y: f64) -> (Span, Span) {
        let wx = (self.x1 - self.x0) as f64 * spread_x;
        let wy = (self.y1 - self.y0) as f64 * spread_y;
        if self.y1 == self.y0 || (self.x1 > self.x0 && wx >= wy) {
            let mid = self.x0 + (self.x1 - self.x0) / 2;
            (Span { x1: mid, ..*self }, Span { x0: mid + 1, ..*self })
        } else {
            let mid = self.y0 + (self.y1 - self.y0) / 2;
            (Span { y1: mid, ..*self }, Span { y0: mid + 1, ..*self })
        }
    }
}

/// Polynomials `Σ_p coef_p exp(j(wv_p x + wh_p y))` sharing their frequencies.
struct PolySet {
    wv: Vec<f64>,
    wh: Vec<f64>,
    coefs: Vec<Vec<Complex64>>,
    /// `Σ_p |coef_p|` weights of the remainder term, per remainder group.
    mags: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Expansion {
    val: Complex64,
    dx: Complex64,
    dy: Complex64,
}

impl Expansion {
    fn corners(&self, hx: f64, hy: f64) -> [Complex64; 4] {
        let a = self.dx * hx;
        let b = self.dy * hy;
        [self.val + a + b, self.val + a - b, self.val - a + b, self.val - a - b]
    }
}

impl PolySet {
    fn expand(&self, cx: f64, cy: f64) -> Vec<Expansion> {
        let e: Vec<Complex64> =
            self.wv.iter().zip(&self.wh).map(|(&v, &h)| Complex64::from_polar(1.0, v * cx + h * cy)).collect();
        self.coefs
            .iter()
            .map(|c| {
                let mut ex = Expansion {
                    val: Complex64::new(0.0, 0.0),
                    dx: Complex64::new(0.0, 0.0),
                    dy: Complex64::new(0.0, 0.0),
                };
                for (p, (&d, &ep)) in c.iter().zip(&e).enumerate() {
                    let t = d * ep;
                    ex.val += t;
                    let jt = Complex64::new(-t.im, t.re);
                    ex.dx += jt * self.wv[p];
                    ex.dy += jt * self.wh[p];
                }
                ex
            })
            .collect()
    }

    fn remainders(&self, hx: f64, hy: f64) -> Vec<f64> {
        self.mags
            .iter()
            .map(|m| {
                0.5 * m
                    .iter()
                    .zip(self.wv.iter().zip(&self.wh))
                    .map(|(&a, (&v, &h))| {
                        let s = v * hx + h * hy;
                        a * s * s
                    })
                    .sum::<f64>()
            })
            .collect()
    }

    fn spreads(&self) -> (f64, f64) {
        (self.wv.iter().cloned().fold(0.0, f64::max), self.wh.iter().cloned().fold(0.0, f64::max))
    }
}

struct Node {
    ub: f64,
    seq: u64,
    span: Span,
    alive: Vec<u32>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.total_cmp(&other.ub).then_with(|| other.seq.cmp(&self.seq))
    }
}

fn norm(h: &[Complex64]) -> f64 {
    h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Phase fraction `((a·b) mod n) / n` computed exactly.
fn frac(a: usize, b: usize, n: usize) -> f64 {
    ((a * b) % n) as f64 / n as f64
}

/// One candidate of the Type-II search: beam group, strongest and secondary slot.
#[derive(Debug, Clone, Copy)]
struct Combo {
    group: usize,
    strongest: usize,
    secondary: usize,
    ps: usize,
    pt: usize,
}

pub(crate) fn type_ii(h: &[Complex64], cb: &TypeIiCodebook) -> Result<Found> {
    let grid = cb.grid();
    let n = grid.len();
    let l = cb.beam_count();
    let os = cb.oversampling();
    let pv = os.factor_v() as f64 * grid.rows as f64;
    let ph = os.factor_h() as f64 * grid.cols as f64;
    let scale = 1.0 / (n as f64).sqrt();

    let mut wv = Vec::with_capacity(n);
    let mut wh = Vec::with_capacity(n);
    for col in 0..grid.cols {
        for row in 0..grid.rows {
            wv.push(TAU * row as f64 / pv);
            wh.push(TAU * col as f64 / ph);
        }
    }
    // polynomial r·N + k: polarization r against beam k at zero rotation offset
    let mut coefs = Vec::with_capacity(2 * n);
    for r in 0..2 {
        for k in 0..n {
            let (bv, bh) = (k / grid.cols, k % grid.cols);
            let mut c = Vec::with_capacity(n);
            for col in 0..grid.cols {
                for row in 0..grid.rows {
                    let ph0 = TAU * (frac(bv, row, grid.rows) + frac(bh, col, grid.cols));
                    c.push(h[r * n + col * grid.rows + row].conj() * Complex64::from_polar(scale, ph0));
                }
            }
            coefs.push(c);
        }
    }
    let mags = (0..2).map(|r| h[r * n..(r + 1) * n].iter().map(|x| x.norm() * scale).collect()).collect();
    let polys = PolySet { wv, wh, coefs, mags };
    let (sx, sy) = polys.spreads();

    let mut combos = Vec::new();
    for group in 0..n {
        for s in 0..2 * l {
            for t in 0..2 * l {
                if s != t {
                    let poly = |j: usize| (j / l) * n + (group + j % l) % n;
                    combos.push(Combo { group, strongest: s, secondary: t, ps: poly(s), pt: poly(t) });
                }
            }
        }
    }
    let amps = cb.amplitude_levels().to_vec();
    let phases = cb.phase_levels().to_vec();
    let margin = MARGIN * norm(h);
    let mut best = Argmax::new(h);

    let score_at = |best: &mut Argmax, idx: TypeIiIndex, beams: &[Vec<Complex64>]| -> Result<()> {
        let w2 = cb.sparse_w2(idx.strongest, idx.secondary, idx.coefficient)?;
        best.offer(cb.encode(&idx)?, inner(h, &combine(beams, &w2)).norm());
        Ok(())
    };

    let bound = |ex: &[Expansion], rho: &[f64], hx: f64, hy: f64, c: &Combo, thr: f64| -> f64 {
        let cs = ex[c.ps].corners(hx, hy);
        let ct = ex[c.pt].corners(hx, hy);
        let (rs, rt) = (rho[c.ps / n], rho[c.pt / n]);
        let us = cs.iter().map(|z| z.norm()).fold(0.0, f64::max) + rs;
        let ut = ct.iter().map(|z| z.norm()).fold(0.0, f64::max) + rt;
        let cheap = us.hypot(ut);
        if cheap < thr {
            return cheap;
        }
        let mut ub: f64 = 0.0;
        for &p in &amps {
            let denom = (1.0 + p * p).sqrt();
            for &ph in &phases {
                let k = ph * p;
                let m = (0..4).map(|i| (cs[i] + k * ct[i]).norm()).fold(0.0, f64::max);
                ub = ub.max((m + rs + p * rt) / denom);
            }
        }
        ub.min(cheap)
    };

    let root = Span {
        x0: 0,
        x1: if grid.rows > 1 { os.factor_v() - 1 } else { 0 },
        y0: 0,
        y1: if grid.cols > 1 { os.factor_h() - 1 } else { 0 },
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Node>, span: Span, parent: &[u32], thr: f64| {
        let (cx, cy) = span.center();
        let (hx, hy) = span.half();
        let ex = polys.expand(cx, cy);
        let rho = polys.remainders(hx, hy);
        let mut alive = Vec::new();
        let mut ub = f64::NEG_INFINITY;
        for &i in parent {
            let b = bound(&ex, &rho, hx, hy, &combos[i as usize], thr);
            if b >= thr {
                alive.push(i);
                ub = ub.max(b);
            }
        }
        if !alive.is_empty() {
            seq += 1;
            heap.push(Node { ub, seq, span, alive });
        }
    };
    let all: Vec<u32> = (0..combos.len() as u32).collect();
    push(&mut heap, root, &all, f64::NEG_INFINITY);

    while let Some(node) = heap.pop() {
        let thr = best.max() - margin;
        if node.ub < thr {
            break;
        }
        if !node.span.is_point() {
            let (a, b) = node.span.split(sx, sy);
            push(&mut heap, a, &node.alive, thr);
            push(&mut heap, b, &node.alive, thr);
            continue;
        }
        let rot = Rotation { q_v: node.span.x0, q_h: node.span.y0 };
        let ex = polys.expand(node.span.x0 as f64, node.span.y0 as f64);
        let mut cache: Option<(usize, Vec<Vec<Complex64>>)> = None;
        for &i in &node.alive {
            let c = combos[i as usize];
            let (vs, vt) = (ex[c.ps].val, ex[c.pt].val);
            for (a, &p) in amps.iter().enumerate() {
                let denom = (1.0 + p * p).sqrt();
                for (ci, &ph) in phases.iter().enumerate() {
                    let thr = best.max() - margin;
                    if (vs + ph * p * vt).norm() / denom < thr {
                        continue;
                    }
                    if !matches!(&cache, Some((g, _)) if *g == c.group) {
                        cache = Some((c.group, cb.beam_vectors(c.group, rot)));
                    }
                    let idx = TypeIiIndex {
                        group: c.group,
                        strongest: c.strongest,
                        secondary: c.secondary,
                        rotation: rot,
                        coefficient: CoefficientIndex { amplitude: a, phase: ci as u64 },
                    };
                    score_at(&mut best, idx, &cache.as_ref().expect("cached").1)?;
                }
            }
        }
    }
    Ok(best.finish().expect("root node always yields a leaf"))
}

pub(crate) fn dft(h: &[Complex64], cb: &DftCodebook) -> Result<Found> {
    let grid = cb.grid();
    let n = grid.len();
    let pols = cb.polarizations();
    let (gv, gh) = cb.grid_size();
    let scale = 1.0 / ((n * pols) as f64).sqrt();
    let mut wv = Vec::with_capacity(n);
    let mut wh = Vec::with_capacity(n);
    let mut coef = Vec::with_capacity(n);
    for col in 0..grid.cols {
        for row in 0..grid.rows {
            let p = col * grid.rows + row;
            wv.push(TAU * row as f64 / gv as f64);
            wh.push(TAU * col as f64 / gh as f64);
            let sum: Complex64 = (0..pols).map(|r| h[r * n + p]).sum();
            coef.push(sum.conj() * scale);
        }
    }
    let mags = vec![coef.iter().map(|c| c.norm()).collect()];
    let polys = PolySet { wv, wh, coefs: vec![coef], mags };
    let (sx, sy) = polys.spreads();
    let margin = MARGIN * norm(h);

    let bound = |span: &Span| -> f64 {
        let (cx, cy) = span.center();
        let (hx, hy) = span.half();
        let ex = polys.expand(cx, cy);
        let rho = polys.remainders(hx, hy)[0];
        ex[0].corners(hx, hy).iter().map(|z| z.norm()).fold(0.0, f64::max) + rho
    };
    let root =
        Span { x0: 0, x1: if grid.rows > 1 { gv - 1 } else { 0 }, y0: 0, y1: if grid.cols > 1 { gh - 1 } else { 0 } };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node { ub: bound(&root), seq, span: root, alive: Vec::new() });
    let mut best = Argmax::new(h);
    while let Some(node) = heap.pop() {
        let thr = best.max() - margin;
        if node.ub < thr {
            break;
        }
        if node.span.is_point() {
            let (tv, th) = (node.span.x0, node.span.y0);
            best.offer(tv * gh + th, inner(h, &cb.vector(tv, th)).norm());
            continue;
        }
        let (a, b) = node.span.split(sx, sy);
        for span in [a, b] {
            let ub = bound(&span);
            if ub >= thr {
                seq += 1;
                heap.push(Node { ub, seq, span, alive: Vec::new() });
            }
        }
    }
    Ok(best.finish().expect("root node always yields a leaf"))
}
