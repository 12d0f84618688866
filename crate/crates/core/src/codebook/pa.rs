//! Panel co-phasing codebook.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::alphabet::{uniform_angle, uniform_phase};
use crate::error::{Error, Result};

/// How the panel phases are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaSearch {
    /// Panels `2..M` in turn, each against the panels already fixed.
    #[default]
    Sequential,
    /// All `2^{B_LP (M−1)}` phase vectors. Diagnostics only.
    Joint,
}

/// Phase of one panel relative to the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PaCandidate {
    /// Zero-based panel index, at least 1.
    pub panel: usize,
    pub phase: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaCodebook {
    line_panels: usize,
    bits: u32,
}

impl PaCodebook {
    /// Fewer than two line panels leave nothing to co-phase; the codebook is
    /// then empty and the line-panel scheme reduces to a single panel.
    pub fn new(line_panels: usize, bits: u32) -> Result<Self> {
        if bits >= 48 {
            return Err(Error::Config(format!("{bits} panel-phase bits are beyond the supported range")));
        }
        if line_panels < 2 {
            log::info!("{line_panels} line panel(s): panel co-phasing disabled");
        }
        Ok(Self { line_panels, bits })
    }

    pub fn line_panels(&self) -> usize {
        self.line_panels
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Phases per panel.
    pub fn alphabet_len(&self) -> u64 {
        1 << self.bits
    }

    /// Phase angles `2πn / 2^{B_LP}`.
    pub fn alphabet(&self) -> Vec<f64> {
        (0..self.alphabet_len()).map(|n| uniform_angle(n, self.bits)).collect()
    }

    pub fn phasor(&self, phase: u64) -> Complex64 {
        uniform_phase(phase, self.bits)
    }

    /// Candidates visited by the sequential search.
    pub fn len(&self) -> u64 {
        self.line_panels.saturating_sub(1) as u64 * self.alphabet_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn candidate(&self, i: u64) -> Result<PaCandidate> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { what: "panel phase candidate", index: i, size: self.len() });
        }
        Ok(PaCandidate { panel: 1 + (i / self.alphabet_len()) as usize, phase: i % self.alphabet_len() })
    }

    pub fn iter(&self) -> impl Iterator<Item = PaCandidate> + '_ {
        (0..self.len()).map(|i| self.candidate(i).expect("in range"))
    }

    /// Column `[1, e^{jθ_2}, …, e^{jθ_M}]` for phase indices of panels `2..M`.
    pub fn phase_vector(&self, phases: &[u64]) -> Result<Vec<Complex64>> {
        if phases.len() != self.line_panels.saturating_sub(1) {
            return Err(Error::Shape(format!("{} panel phases for {} line panels", phases.len(), self.line_panels)));
        }
        let mut out = vec![Complex64::new(1.0, 0.0)];
        for &p in phases {
            if p >= self.alphabet_len() {
                return Err(Error::IndexOutOfRange { what: "panel phase", index: p, size: self.alphabet_len() });
            }
            out.push(self.phasor(p));
        }
        Ok(out)
    }
}
