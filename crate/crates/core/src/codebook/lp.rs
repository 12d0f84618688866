//! Line-panel codebook: one Type-II codebook per vertical line of panels plus
//! panel co-phasing.

use num_complex::Complex64;

use super::beams::normalize;
use super::pa::{PaCodebook, PaSearch};
use super::typeii::{TypeIiCodebook, TypeIiIndex};
use super::{AmplitudeAlphabet, BitAllocation, Codeword, LpGeometry, Provenance};
use crate::error::{Error, Result};

/// Where each line panel's ports sit in the port-ordered channel vector.
///
/// Ports are ordered polarization, column, row. Line panel `m` owns columns
/// `m·N_h..(m+1)·N_h`, which is one contiguous block per polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineLayout {
    pub line_panels: usize,
    /// `N_LP`: ports of one line panel in one polarization.
    pub panel_ports: usize,
    pub polarizations: usize,
}

impl LineLayout {
    pub fn new(geo: &LpGeometry, polarizations: usize) -> Self {
        Self { line_panels: geo.line_panels, panel_ports: geo.panel.len(), polarizations }
    }

    pub fn port_count(&self) -> usize {
        self.line_panels * self.panel_ports * self.polarizations
    }

    pub fn slice_len(&self) -> usize {
        self.panel_ports * self.polarizations
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.port_count() {
            return Err(Error::Shape(format!("vector of length {len}, expected {}", self.port_count())));
        }
        Ok(())
    }

    /// Channel slice of line panel `m`, polarization blocks stacked.
    pub fn slice(&self, h: &[Complex64], m: usize) -> Result<Vec<Complex64>> {
        self.check(h.len())?;
        if m >= self.line_panels {
            return Err(Error::IndexOutOfRange { what: "line panel", index: m as u64, size: self.line_panels as u64 });
        }
        let per_pol = self.line_panels * self.panel_ports;
        let mut out = Vec::with_capacity(self.slice_len());
        for r in 0..self.polarizations {
            let start = r * per_pol + m * self.panel_ports;
            out.extend_from_slice(&h[start..start + self.panel_ports]);
        }
        Ok(out)
    }

    /// Port-ordered vector rearranged as the concatenation of line-panel slices.
    pub fn to_line_order(&self, h: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(h.len());
        for m in 0..self.line_panels {
            out.extend(self.slice(h, m)?);
        }
        Ok(out)
    }

    /// Inverse of [`LineLayout::to_line_order`].
    pub fn to_port_order(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(v.len())?;
        let per_pol = self.line_panels * self.panel_ports;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for m in 0..self.line_panels {
            for r in 0..self.polarizations {
                let src = m * self.slice_len() + r * self.panel_ports;
                let dst = r * per_pol + m * self.panel_ports;
                out[dst..dst + self.panel_ports].copy_from_slice(&v[src..src + self.panel_ports]);
            }
        }
        Ok(out)
    }
}

/// Concatenation `[h̄_1; e^{jθ_2} h̄_2; …]` of per-panel codewords. `phasors`
/// holds the rotations of panels `2..M`.
pub fn assemble_lp(panels: &[Vec<Complex64>], phasors: &[Complex64]) -> Result<Vec<Complex64>> {
    if panels.is_empty() || phasors.len() + 1 != panels.len() {
        return Err(Error::Shape(format!("{} panel phases for {} panels", phasors.len(), panels.len())));
    }
    let len = panels[0].len();
    if panels.iter().any(|p| p.len() != len) {
        return Err(Error::Shape("per-panel codewords differ in length".into()));
    }
    let mut out = Vec::with_capacity(len * panels.len());
    out.extend_from_slice(&panels[0]);
    for (p, &w) in panels[1..].iter().zip(phasors) {
        out.extend(p.iter().map(|&x| w * x));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct LpCodebook {
    layout: LineLayout,
    slp: TypeIiCodebook,
    pa: PaCodebook,
    pa_search: PaSearch,
}

impl LpCodebook {
    pub fn new(
        geo: &LpGeometry,
        alloc: BitAllocation,
        amplitude: AmplitudeAlphabet,
        pa_search: PaSearch,
    ) -> Result<Self> {
        if geo.line_panels == 0 {
            return Err(Error::Config("line-panel codebook needs at least one line panel".into()));
        }
        Ok(Self {
            layout: LineLayout::new(geo, 2),
            slp: TypeIiCodebook::new(geo.panel, geo.beams, alloc, amplitude)?,
            pa: PaCodebook::new(geo.line_panels, alloc.b_lp)?,
            pa_search,
        })
    }

    pub fn layout(&self) -> &LineLayout {
        &self.layout
    }

    pub fn slp(&self) -> &TypeIiCodebook {
        &self.slp
    }

    pub fn pa(&self) -> &PaCodebook {
        &self.pa
    }

    pub fn pa_search(&self) -> PaSearch {
        self.pa_search
    }

    /// Codewords evaluated by the two-stage search.
    pub fn search_size(&self) -> u128 {
        let m = self.layout.line_panels as u128;
        let pa = match self.pa_search {
            PaSearch::Sequential => self.pa.len() as u128,
            PaSearch::Joint if m >= 2 => (self.pa.alphabet_len() as u128).saturating_pow((m - 1) as u32),
            PaSearch::Joint => 0,
        };
        m.saturating_mul(self.slp.len()).saturating_add(pa)
    }

    /// Unit-norm, port-ordered codeword for per-panel indices and panel phases.
    pub fn codeword(&self, panels: &[TypeIiIndex], phases: &[u64]) -> Result<Codeword> {
        if panels.len() != self.layout.line_panels {
            return Err(Error::Shape(format!(
                "{} panel indices for {} line panels",
                panels.len(),
                self.layout.line_panels
            )));
        }
        let vectors = panels.iter().map(|i| self.slp.codeword(i).map(|c| c.vector)).collect::<Result<Vec<_>>>()?;
        let phasors = self.pa.phase_vector(phases)?;
        let mut v = self.layout.to_port_order(&assemble_lp(&vectors, &phasors[1..])?)?;
        normalize(&mut v);
        Ok(Codeword {
            vector: v,
            provenance: Provenance::LinePanel {
                panels: panels.iter().map(|i| self.slp.provenance(i)).collect(),
                phases: phases.to_vec(),
            },
        })
    }
}
