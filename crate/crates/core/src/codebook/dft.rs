//! Plain 2D-DFT codebook used as the baseline.

use num_complex::Complex64;

use super::beams::{grid_beam, normalize};
use super::{Codeword, PortGrid, Provenance};
use crate::error::{Error, Result};

/// `2^B` beams on a `2^{⌊B/2⌋} × 2^{⌈B/2⌉}` frequency grid, repeated on both
/// polarizations when the array is cross-polarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DftCodebook {
    grid: PortGrid,
    polarizations: usize,
    bits_v: u32,
    bits_h: u32,
}

impl DftCodebook {
    pub fn new(grid: PortGrid, polarizations: usize, budget: u32) -> Result<Self> {
        if grid.is_empty() || !(1..=2).contains(&polarizations) {
            return Err(Error::Config("DFT codebook needs a non-empty grid and 1 or 2 polarizations".into()));
        }
        if budget > 62 {
            return Err(Error::Config(format!("DFT budget {budget} exceeds 62 bits")));
        }
        Ok(Self { grid, polarizations, bits_v: budget / 2, bits_h: budget - budget / 2 })
    }

    pub fn grid(&self) -> PortGrid {
        self.grid
    }

    pub fn polarizations(&self) -> usize {
        self.polarizations
    }

    /// Grid sizes `(G_v, G_h)`.
    pub fn grid_size(&self) -> (u64, u64) {
        (1 << self.bits_v, 1 << self.bits_h)
    }

    pub fn len(&self) -> u64 {
        1 << (self.bits_v + self.bits_h)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.polarizations * self.grid.len()
    }

    /// Index `θ_v·G_h + θ_h`.
    pub fn split_index(&self, i: u64) -> Result<(u64, u64)> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { what: "DFT codeword", index: i, size: self.len() });
        }
        let (_, gh) = self.grid_size();
        Ok((i / gh, i % gh))
    }

    pub fn vector(&self, theta_v: u64, theta_h: u64) -> Vec<Complex64> {
        let (gv, gh) = self.grid_size();
        let b = grid_beam(self.grid, theta_v, gv, theta_h, gh);
        let mut out = Vec::with_capacity(self.dim());
        for _ in 0..self.polarizations {
            out.extend_from_slice(&b);
        }
        normalize(&mut out);
        out
    }

    pub fn codeword_at(&self, i: u64) -> Result<Codeword> {
        let (theta_v, theta_h) = self.split_index(i)?;
        Ok(Codeword { vector: self.vector(theta_v, theta_h), provenance: Provenance::Dft { theta_v, theta_h } })
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Codeword)> + '_ {
        (0..self.len()).map(move |i| (i, self.codeword_at(i).expect("in range")))
    }
}
