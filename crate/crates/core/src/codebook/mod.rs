//! Codebook families: the 2D-DFT baseline, the single-panel Type-II codebook
//! and the line-panel codebook, with their bit and search-size accounting.

pub mod alphabet;
pub mod beams;
pub mod complexity;
pub mod dft;
pub mod lp;
pub mod pa;
pub mod typeii;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ArrayConfig;
use crate::error::{Error, Result};

pub use alphabet::AmplitudeAlphabet;
pub use beams::{build_w1, build_w2, dft_beam, grid_beam, CoefficientIndex, Oversampling, Rotation};
pub use dft::DftCodebook;
pub use lp::{LineLayout, LpCodebook};
pub use pa::{PaCodebook, PaSearch};
pub use typeii::{TypeIiCodebook, TypeIiIndex, TypeIiProvenance};

/// Port grid of one polarization, flattened column-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortGrid {
    pub rows: usize,
    pub cols: usize,
}

impl PortGrid {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whole array treated as one panel.
    pub fn full_array(config: &ArrayConfig) -> Self {
        Self::new(config.port_rows(), config.port_cols())
    }

    /// One vertical line of panels.
    pub fn line_panel(config: &ArrayConfig) -> Self {
        Self::new(config.port_rows(), config.elements_h)
    }

    /// Splits `total` rotation bits over the dimensions that have more than
    /// one port, giving the odd bit to the horizontal one.
    pub fn split_rotation_bits(&self, total: u32) -> (u32, u32) {
        match (self.rows > 1, self.cols > 1) {
            (false, true) => (0, total),
            (true, false) => (total, 0),
            _ => (total / 2, total - total / 2),
        }
    }
}

/// Feedback bits per codebook component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct BitAllocation {
    pub b_lp: u32,
    pub b_v: u32,
    pub b_h: u32,
    pub b_p: u32,
    pub b_c: u32,
}

impl BitAllocation {
    pub const fn new(b_lp: u32, b_v: u32, b_h: u32, b_p: u32, b_c: u32) -> Self {
        Self { b_lp, b_v, b_h, b_p, b_c }
    }

    pub fn oversampling(&self) -> Oversampling {
        Oversampling { b_v: self.b_v, b_h: self.b_h }
    }

    pub fn components(&self) -> [u32; 5] {
        [self.b_lp, self.b_v, self.b_h, self.b_p, self.b_c]
    }

    pub fn from_components(c: [u32; 5]) -> Self {
        Self::new(c[0], c[1], c[2], c[3], c[4])
    }

    /// Beam-selection bits for `beams` beams on `grid`.
    pub fn dft_bits(&self, grid: PortGrid, beams: usize) -> u64 {
        complexity::dft_bits(self.b_v, self.b_h, grid.len(), beams)
    }

    /// Type-II report size on `grid` (the line-panel phase bits are ignored).
    pub fn sp_bits(&self, grid: PortGrid, beams: usize) -> u64 {
        complexity::type_ii_bits(self.b_v, self.b_h, self.b_p, self.b_c, grid.len(), beams)
    }

    pub fn sp_search_size(&self, grid: PortGrid, beams: usize) -> u128 {
        complexity::type_ii_search_size(self.b_v, self.b_h, self.b_p, self.b_c, grid.len(), beams)
    }

    pub fn lp_bits(&self, geo: &LpGeometry) -> u64 {
        complexity::lp_bits(
            self.b_lp,
            self.b_v,
            self.b_h,
            self.b_p,
            self.b_c,
            geo.line_panels,
            geo.panel.len(),
            geo.beams,
        )
    }

    pub fn slp_search_size(&self, geo: &LpGeometry) -> u128 {
        self.sp_search_size(geo.panel, geo.beams)
    }

    pub fn pa_search_size(&self, geo: &LpGeometry) -> u128 {
        complexity::pa_search_size(geo.line_panels, self.b_lp)
    }

    pub fn lp_search_size(&self, geo: &LpGeometry) -> u128 {
        complexity::lp_search_size(
            self.b_lp,
            self.b_v,
            self.b_h,
            self.b_p,
            self.b_c,
            geo.line_panels,
            geo.panel.len(),
            geo.beams,
        )
    }

    /// Standard Type-II allocation (`B_p = 3`, `B_c = 2`) with the rest of
    /// `budget` spent on rotation bits.
    pub fn three_gpp_sp(budget: u32, grid: PortGrid, beams: usize) -> Result<Self> {
        let base = Self::new(0, 0, 0, 3, 2);
        let min = base.sp_bits(grid, beams);
        if (budget as u64) < min {
            return Err(Error::Config(format!("single-panel report needs at least {min} bits, budget is {budget}")));
        }
        let (b_v, b_h) = grid.split_rotation_bits((budget as u64 - min) as u32);
        Ok(Self { b_v, b_h, ..base })
    }

    /// Standard line-panel allocation (`B_LP = 2`, `B_p = 3`, `B_c = 2`) with
    /// the rest of `budget` spent on rotation bits. Bits that cannot be
    /// shared evenly by the line panels stay unused.
    pub fn three_gpp_lp(budget: u32, geo: &LpGeometry) -> Result<Self> {
        let base = Self::new(2, 0, 0, 3, 2);
        let min = base.lp_bits(geo);
        if (budget as u64) < min {
            return Err(Error::Config(format!("line-panel report needs at least {min} bits, budget is {budget}")));
        }
        let per_panel = (budget as u64 - min) / geo.line_panels as u64;
        let (b_v, b_h) = geo.panel.split_rotation_bits(per_panel as u32);
        Ok(Self { b_v, b_h, ..base })
    }
}

/// Shape of a line-panel codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpGeometry {
    pub line_panels: usize,
    pub panel: PortGrid,
    pub beams: usize,
}

impl LpGeometry {
    pub fn from_config(config: &ArrayConfig, beams: usize) -> Self {
        Self { line_panels: config.panels_h, panel: PortGrid::line_panel(config), beams }
    }
}

/// Parametric description of one codebook family instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CodebookSpec {
    Dft {
        grid: PortGrid,
        polarizations: usize,
        budget: u32,
    },
    TypeIiSp {
        grid: PortGrid,
        beams: usize,
        alloc: BitAllocation,
        #[serde(default)]
        amplitude: AmplitudeAlphabet,
    },
    Lp {
        geometry: LpGeometry,
        alloc: BitAllocation,
        #[serde(default)]
        amplitude: AmplitudeAlphabet,
        #[serde(default)]
        pa_search: PaSearch,
    },
}

impl CodebookSpec {
    pub fn dft(config: &ArrayConfig, budget: u32) -> Self {
        CodebookSpec::Dft { grid: PortGrid::full_array(config), polarizations: config.polarizations(), budget }
    }

    pub fn sp(config: &ArrayConfig, beams: usize, alloc: BitAllocation) -> Self {
        CodebookSpec::TypeIiSp {
            grid: PortGrid::full_array(config),
            beams,
            alloc,
            amplitude: AmplitudeAlphabet::default(),
        }
    }

    pub fn lp(config: &ArrayConfig, beams: usize, alloc: BitAllocation) -> Self {
        CodebookSpec::Lp {
            geometry: LpGeometry::from_config(config, beams),
            alloc,
            amplitude: AmplitudeAlphabet::default(),
            pa_search: PaSearch::default(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            CodebookSpec::Dft { .. } => "dft",
            CodebookSpec::TypeIiSp { .. } => "sp",
            CodebookSpec::Lp { .. } => "lp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CodebookSpec::Dft { grid, polarizations, .. } => {
                if grid.is_empty() || !(1..=2).contains(polarizations) {
                    return Err(Error::Config("DFT codebook needs a non-empty grid and 1 or 2 polarizations".into()));
                }
                Ok(())
            }
            CodebookSpec::TypeIiSp { grid, beams, .. } => check_beams(*grid, *beams),
            CodebookSpec::Lp { geometry, .. } => {
                if geometry.line_panels == 0 {
                    return Err(Error::Config("line-panel codebook needs at least one line panel".into()));
                }
                check_beams(geometry.panel, geometry.beams)
            }
        }
    }

    pub fn feedback_bits(&self) -> u64 {
        match self {
            CodebookSpec::Dft { budget, .. } => *budget as u64,
            CodebookSpec::TypeIiSp { grid, beams, alloc, .. } => alloc.sp_bits(*grid, *beams),
            CodebookSpec::Lp { geometry, alloc, .. } => alloc.lp_bits(geometry),
        }
    }

    pub fn search_size(&self) -> u128 {
        match self {
            CodebookSpec::Dft { budget, .. } => complexity::dft_search_size(*budget),
            CodebookSpec::TypeIiSp { grid, beams, alloc, .. } => alloc.sp_search_size(*grid, *beams),
            CodebookSpec::Lp { geometry, alloc, .. } => alloc.lp_search_size(geometry),
        }
    }
}

pub(crate) fn check_beams(grid: PortGrid, beams: usize) -> Result<()> {
    if !(2..=4).contains(&beams) {
        return Err(Error::Config(format!("beam count L must be 2, 3 or 4, got {beams}")));
    }
    if beams > grid.len() {
        return Err(Error::Config(format!(
            "{beams} orthogonal beams do not fit a {}x{} port grid",
            grid.rows, grid.cols
        )));
    }
    Ok(())
}

/// Precoding vector together with the indices that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codeword {
    pub vector: Vec<Complex64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Dft { theta_v: u64, theta_h: u64 },
    TypeIi(TypeIiProvenance),
    LinePanel { panels: Vec<TypeIiProvenance>, phases: Vec<u64> },
    Unquantized,
}

/// One row of the complexity figure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityRow {
    pub family: &'static str,
    pub budget: u32,
    pub omega: u128,
}

/// Search sizes of the three families at each budget, using the standard
/// allocations. Budgets below a family's minimum report size are skipped.
pub fn complexity_rows(config: &ArrayConfig, beams: usize, budgets: &[u32]) -> Result<Vec<ComplexityRow>> {
    if budgets.is_empty() {
        return Err(Error::Config("budget sweep is empty".into()));
    }
    let grid = PortGrid::full_array(config);
    let geo = LpGeometry::from_config(config, beams);
    check_beams(grid, beams)?;
    check_beams(geo.panel, beams)?;
    let mut rows = Vec::new();
    for &b in budgets {
        rows.push(ComplexityRow { family: "dft", budget: b, omega: complexity::dft_search_size(b) });
        if let Ok(a) = BitAllocation::three_gpp_sp(b, grid, beams) {
            rows.push(ComplexityRow { family: "sp", budget: b, omega: a.sp_search_size(grid, beams) });
        }
        if let Ok(a) = BitAllocation::three_gpp_lp(b, &geo) {
            rows.push(ComplexityRow { family: "lp", budget: b, omega: a.lp_search_size(&geo) });
        }
    }
    Ok(rows)
}
