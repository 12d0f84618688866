//! Type-II codebook over one port grid, enumerated lazily.
//!
//! A codeword picks a group of `L` adjacent orthogonal beams, a shared
//! rotation, the strongest of the `2L` (polarization, beam) slots and one
//! secondary slot whose coefficient is quantized to an amplitude and a
//! co-phase. The strongest slot carries coefficient one and every other slot
//! zero, so the codebook holds exactly
//! `N · 2L · (2L−1) · 2^{B_v+B_h} · |A| · 2^{B_c}` codewords.
//!
//! Linear index digits, most significant first: beam group, strongest slot,
//! secondary slot, `q_v`, `q_h`, amplitude, co-phase.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::alphabet::{cophase_levels, AmplitudeAlphabet};
use super::beams::{combine, dft_beam, dft_beam_unchecked, CoefficientIndex, Oversampling, Rotation};
use super::{check_beams, BitAllocation, Codeword, PortGrid, Provenance};
use crate::error::{Error, Result};

/// Decoded linear index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeIiIndex {
    pub group: usize,
    pub strongest: usize,
    pub secondary: usize,
    pub rotation: Rotation,
    pub coefficient: CoefficientIndex,
}

/// Everything needed to rebuild a Type-II codeword without its codebook.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeIiProvenance {
    pub grid: PortGrid,
    pub b_v: u32,
    pub b_h: u32,
    pub b_p: u32,
    pub b_c: u32,
    pub amplitude_alphabet: AmplitudeAlphabet,
    /// `(n_v, n_h)` of each selected beam, in slot order.
    pub beams: Vec<(usize, usize)>,
    pub rotation: Rotation,
    pub strongest: usize,
    pub secondary: usize,
    pub coefficient: CoefficientIndex,
}

impl TypeIiProvenance {
    /// Rebuilds the codeword from the recorded indices.
    pub fn reconstruct(&self) -> Result<Vec<Complex64>> {
        let cb = TypeIiCodebook::new(
            self.grid,
            self.beams.len(),
            BitAllocation::new(0, self.b_v, self.b_h, self.b_p, self.b_c),
            self.amplitude_alphabet,
        )?;
        let beams = self
            .beams
            .iter()
            .map(|&(v, h)| dft_beam(self.grid, cb.os, v, h, self.rotation))
            .collect::<Result<Vec<_>>>()?;
        let w2 = cb.sparse_w2(self.strongest, self.secondary, self.coefficient)?;
        Ok(combine(&beams, &w2))
    }
}

#[derive(Debug, Clone)]
pub struct TypeIiCodebook {
    grid: PortGrid,
    beams: usize,
    os: Oversampling,
    b_p: u32,
    b_c: u32,
    amplitude: AmplitudeAlphabet,
    amp_levels: Vec<f64>,
    phases: Vec<Complex64>,
}

impl TypeIiCodebook {
    pub fn new(grid: PortGrid, beams: usize, alloc: BitAllocation, amplitude: AmplitudeAlphabet) -> Result<Self> {
        check_beams(grid, beams)?;
        if alloc.b_v >= 40 || alloc.b_h >= 40 || alloc.b_c >= 40 || alloc.b_p >= 20 {
            return Err(Error::Config(format!("allocation {alloc:?} is beyond the supported alphabet sizes")));
        }
        Ok(Self {
            grid,
            beams,
            os: alloc.oversampling(),
            b_p: alloc.b_p,
            b_c: alloc.b_c,
            amplitude,
            amp_levels: amplitude.levels(alloc.b_p),
            phases: cophase_levels(alloc.b_c),
        })
    }

    pub fn grid(&self) -> PortGrid {
        self.grid
    }

    pub fn beam_count(&self) -> usize {
        self.beams
    }

    pub fn oversampling(&self) -> Oversampling {
        self.os
    }

    pub fn amplitude_levels(&self) -> &[f64] {
        &self.amp_levels
    }

    pub fn phase_levels(&self) -> &[Complex64] {
        &self.phases
    }

    /// Length of each codeword (both polarizations).
    pub fn dim(&self) -> usize {
        2 * self.grid.len()
    }

    fn slots(&self) -> usize {
        2 * self.beams
    }

    /// Digit radices, most significant first.
    fn radices(&self) -> [u128; 7] {
        [
            self.grid.len() as u128,
            self.slots() as u128,
            self.slots() as u128 - 1,
            self.os.factor_v() as u128,
            self.os.factor_h() as u128,
            self.amp_levels.len() as u128,
            self.phases.len() as u128,
        ]
    }

    /// Number of codewords.
    pub fn len(&self) -> u128 {
        self.radices().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self, linear: u64) -> Result<TypeIiIndex> {
        if linear as u128 >= self.len() {
            return Err(Error::IndexOutOfRange {
                what: "type-II codeword",
                index: linear,
                size: self.len().min(u64::MAX as u128) as u64,
            });
        }
        let mut digits = [0u64; 7];
        let mut rest = linear as u128;
        for (d, r) in digits.iter_mut().zip(self.radices()).rev() {
            *d = (rest % r) as u64;
            rest /= r;
        }
        let strongest = digits[1] as usize;
        let t = digits[2] as usize;
        Ok(TypeIiIndex {
            group: digits[0] as usize,
            strongest,
            secondary: if t < strongest { t } else { t + 1 },
            rotation: Rotation { q_v: digits[3], q_h: digits[4] },
            coefficient: CoefficientIndex { amplitude: digits[5] as usize, phase: digits[6] },
        })
    }

    pub fn encode(&self, idx: &TypeIiIndex) -> Result<u64> {
        if idx.secondary == idx.strongest {
            return Err(Error::Domain("secondary slot equals the strongest slot".into()));
        }
        let t = if idx.secondary < idx.strongest { idx.secondary } else { idx.secondary - 1 };
        let digits = [
            idx.group as u128,
            idx.strongest as u128,
            t as u128,
            idx.rotation.q_v as u128,
            idx.rotation.q_h as u128,
            idx.coefficient.amplitude as u128,
            idx.coefficient.phase as u128,
        ];
        let names = ["beam group", "strongest slot", "secondary slot", "q_v", "q_h", "amplitude", "co-phase"];
        let mut acc: u128 = 0;
        for ((d, r), what) in digits.iter().zip(self.radices()).zip(names) {
            if *d >= r {
                return Err(Error::IndexOutOfRange { what, index: *d as u64, size: r as u64 });
            }
            acc = acc * r + d;
        }
        u64::try_from(acc).map_err(|_| Error::Domain("codeword index exceeds 64 bits".into()))
    }

    /// `(n_v, n_h)` of the beams in group `g`: flattened indices `g..g+L`
    /// modulo `N`, horizontal index fastest.
    pub fn group_beams(&self, group: usize) -> Vec<(usize, usize)> {
        let n = self.grid.len();
        (0..self.beams)
            .map(|i| {
                let k = (group + i) % n;
                (k / self.grid.cols, k % self.grid.cols)
            })
            .collect()
    }

    pub(crate) fn beam_vectors(&self, group: usize, rot: Rotation) -> Vec<Vec<Complex64>> {
        self.group_beams(group).into_iter().map(|(v, h)| dft_beam_unchecked(self.grid, self.os, v, h, rot)).collect()
    }

    pub(crate) fn sparse_w2(
        &self,
        strongest: usize,
        secondary: usize,
        coef: CoefficientIndex,
    ) -> Result<Vec<Complex64>> {
        let slots = self.slots();
        if strongest >= slots || secondary >= slots || strongest == secondary {
            return Err(Error::Domain(format!("invalid slot pair ({strongest}, {secondary}) for {slots} slots")));
        }
        let p = *self.amp_levels.get(coef.amplitude).ok_or(Error::IndexOutOfRange {
            what: "amplitude",
            index: coef.amplitude as u64,
            size: self.amp_levels.len() as u64,
        })?;
        let c = *self.phases.get(coef.phase as usize).ok_or(Error::IndexOutOfRange {
            what: "co-phase",
            index: coef.phase,
            size: self.phases.len() as u64,
        })?;
        let mut w2 = vec![Complex64::new(0.0, 0.0); slots];
        w2[strongest] = Complex64::new(1.0, 0.0);
        w2[secondary] = c * p;
        Ok(w2)
    }

    pub fn provenance(&self, idx: &TypeIiIndex) -> TypeIiProvenance {
        TypeIiProvenance {
            grid: self.grid,
            b_v: self.os.b_v,
            b_h: self.os.b_h,
            b_p: self.b_p,
            b_c: self.b_c,
            amplitude_alphabet: self.amplitude,
            beams: self.group_beams(idx.group),
            rotation: idx.rotation,
            strongest: idx.strongest,
            secondary: idx.secondary,
            coefficient: idx.coefficient,
        }
    }

    pub fn codeword(&self, idx: &TypeIiIndex) -> Result<Codeword> {
        self.encode(idx)?;
        let beams = self.beam_vectors(idx.group, idx.rotation);
        let w2 = self.sparse_w2(idx.strongest, idx.secondary, idx.coefficient)?;
        Ok(Codeword { vector: combine(&beams, &w2), provenance: Provenance::TypeIi(self.provenance(idx)) })
    }

    pub fn codeword_at(&self, linear: u64) -> Result<Codeword> {
        self.codeword(&self.decode(linear)?)
    }

    /// Lazy stream over every codeword, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, Codeword)> + '_ {
        let n = u64::try_from(self.len()).unwrap_or(u64::MAX);
        (0..n).map(move |i| (i, self.codeword_at(i).expect("index within range")))
    }

    /// Visits the codeword vectors with indices in `range`, reusing beam
    /// vectors between consecutive codewords that share them.
    pub fn for_each_in(&self, range: std::ops::Range<u64>, mut f: impl FnMut(u64, &[Complex64])) {
        let end = range.end.min(u64::try_from(self.len()).unwrap_or(u64::MAX));
        let mut cached: Option<(usize, Rotation, Vec<Vec<Complex64>>)> = None;
        for i in range.start..end {
            let idx = self.decode(i).expect("index within range");
            let fresh = !matches!(&cached, Some((g, r, _)) if *g == idx.group && *r == idx.rotation);
            if fresh {
                cached = Some((idx.group, idx.rotation, self.beam_vectors(idx.group, idx.rotation)));
            }
            let beams = &cached.as_ref().expect("cached beams").2;
            let w2 = self.sparse_w2(idx.strongest, idx.secondary, idx.coefficient).expect("valid digits");
            f(i, &combine(beams, &w2));
        }
    }
}
