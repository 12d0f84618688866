//! Oversampled 2D-DFT beams and the W1/W2 factors built from them.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::alphabet::{uniform_phase, AmplitudeAlphabet};
use super::PortGrid;
use crate::error::{Error, Result};

/// Beam on a `rows × cols` port grid with spatial frequencies `theta_v / period_v`
/// and `theta_h / period_h`, flattened column-major and scaled to unit norm.
///
/// Phases are reduced modulo the period in integer arithmetic before the
/// conversion to radians, so very fine grids stay exact.
pub fn grid_beam(grid: PortGrid, theta_v: u64, period_v: u64, theta_h: u64, period_h: u64) -> Vec<Complex64> {
    let scale = 1.0 / (grid.len() as f64).sqrt();
    let mut out = Vec::with_capacity(grid.len());
    for col in 0..grid.cols as u128 {
        let fh = ((theta_h as u128 * col) % period_h as u128) as f64 / period_h as f64;
        for row in 0..grid.rows as u128 {
            let fv = ((theta_v as u128 * row) % period_v as u128) as f64 / period_v as f64;
            out.push(Complex64::from_polar(scale, TAU * (fv + fh)));
        }
    }
    out
}

/// Rotation offsets `(q_v, q_h)` shared by every beam of a codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub struct Rotation {
    pub q_v: u64,
    pub q_h: u64,
}

/// Oversampling bits of the two grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Oversampling {
    pub b_v: u32,
    pub b_h: u32,
}

impl Oversampling {
    pub fn factor_v(self) -> u64 {
        1 << self.b_v
    }

    pub fn factor_h(self) -> u64 {
        1 << self.b_h
    }

    pub fn check(self, rot: Rotation) -> Result<()> {
        if rot.q_v >= self.factor_v() {
            return Err(Error::IndexOutOfRange { what: "q_v", index: rot.q_v, size: self.factor_v() });
        }
        if rot.q_h >= self.factor_h() {
            return Err(Error::IndexOutOfRange { what: "q_h", index: rot.q_h, size: self.factor_h() });
        }
        Ok(())
    }
}

/// Oversampled DFT beam `(n_v, n_h)` at rotation `rot`.
///
/// Port `(m, n)` sits at flat index `n·N_v^t + m` and carries
/// `exp(j2π(θ_v m / (2^{B_v} N_v^t) + θ_h n / (2^{B_h} N_h^t))) / √N` with
/// `θ = 2^B·n + q` per dimension.
pub fn dft_beam(grid: PortGrid, os: Oversampling, n_v: usize, n_h: usize, rot: Rotation) -> Result<Vec<Complex64>> {
    if n_v >= grid.rows {
        return Err(Error::IndexOutOfRange { what: "n_v", index: n_v as u64, size: grid.rows as u64 });
    }
    if n_h >= grid.cols {
        return Err(Error::IndexOutOfRange { what: "n_h", index: n_h as u64, size: grid.cols as u64 });
    }
    os.check(rot)?;
    Ok(dft_beam_unchecked(grid, os, n_v, n_h, rot))
}

pub(crate) fn dft_beam_unchecked(
    grid: PortGrid,
    os: Oversampling,
    n_v: usize,
    n_h: usize,
    rot: Rotation,
) -> Vec<Complex64> {
    let theta_v = os.factor_v() * n_v as u64 + rot.q_v;
    let theta_h = os.factor_h() * n_h as u64 + rot.q_h;
    grid_beam(grid, theta_v, os.factor_v() * grid.rows as u64, theta_h, os.factor_h() * grid.cols as u64)
}

/// `diag(B, B)` for the selected beams, one column per (polarization, beam).
pub fn build_w1(
    grid: PortGrid,
    os: Oversampling,
    beams: &[(usize, usize)],
    rot: Rotation,
) -> Result<DMatrix<Complex64>> {
    if beams.is_empty() {
        return Err(Error::InvalidBeamSet("no beams selected".into()));
    }
    for (i, a) in beams.iter().enumerate() {
        if beams[..i].contains(a) {
            return Err(Error::InvalidBeamSet(format!("beam {a:?} selected twice")));
        }
    }
    let n = grid.len();
    let l = beams.len();
    let mut w1 = DMatrix::zeros(2 * n, 2 * l);
    for (i, &(n_v, n_h)) in beams.iter().enumerate() {
        let b = dft_beam(grid, os, n_v, n_h, rot)?;
        for (p, &x) in b.iter().enumerate() {
            w1[(p, i)] = x;
            w1[(n + p, l + i)] = x;
        }
    }
    Ok(w1)
}

/// Amplitude and co-phase index of one combining coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub struct CoefficientIndex {
    pub amplitude: usize,
    pub phase: u64,
}

/// Combining vector `[1, c p, …]` with the leading coefficient fixed to one.
pub fn build_w2(
    amplitude: AmplitudeAlphabet,
    b_p: u32,
    b_c: u32,
    coefficients: &[CoefficientIndex],
) -> Result<Vec<Complex64>> {
    let levels = amplitude.levels(b_p);
    let phases = 1u64 << b_c;
    let mut w2 = Vec::with_capacity(coefficients.len() + 1);
    w2.push(Complex64::new(1.0, 0.0));
    for c in coefficients {
        let p = *levels.get(c.amplitude).ok_or(Error::IndexOutOfRange {
            what: "amplitude",
            index: c.amplitude as u64,
            size: levels.len() as u64,
        })?;
        if c.phase >= phases {
            return Err(Error::IndexOutOfRange { what: "co-phase", index: c.phase, size: phases });
        }
        w2.push(uniform_phase(c.phase, b_c) * p);
    }
    Ok(w2)
}

/// `W1·W2` from the beam vectors directly, normalized to unit norm.
///
/// Slot `j` of `w2` addresses polarization `j / L` and beam `j % L`.
pub fn combine(beams: &[Vec<Complex64>], w2: &[Complex64]) -> Vec<Complex64> {
    let l = beams.len();
    debug_assert_eq!(w2.len(), 2 * l);
    let n = beams[0].len();
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (j, &w) in w2.iter().enumerate() {
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        let dst = &mut out[(j / l) * n..(j / l + 1) * n];
        for (o, &b) in dst.iter_mut().zip(&beams[j % l]) {
            *o += w * b;
        }
    }
    normalize(&mut out);
    out
}

pub(crate) fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        let inv = 1.0 / norm;
        for x in v.iter_mut() {
            *x *= inv;
        }
    }
}
