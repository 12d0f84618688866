//! Multi-path, spatially correlated channels for a multi-panel planar array.
//!
//! Every path contributes a rank-one phase pattern across the element grid whose
//! magnitude is the path's large-scale coefficient. Paths are summed, combined per
//! RF chain by the vertical 1-to-M analog weight and finally vectorized.
//!
//! Port ordering of a [`ChannelRealization`] is fixed throughout the crate:
//! polarization slices are stacked, and inside a slice ports are stored column-major
//! (`col * port_rows + row`), so all ports of one horizontal panel are contiguous.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Panel and element geometry of the base-station array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// `M_v`
    pub panels_v: usize,
    /// `M_h`
    pub panels_h: usize,
    /// `N_v`, elements per panel column
    pub elements_v: usize,
    /// `N_h`, elements per panel row
    pub elements_h: usize,
    /// `Z_M` in meters
    pub panel_spacing_v: f64,
    /// `Y_M` in meters
    pub panel_spacing_h: f64,
    /// `Z_N` in meters
    pub element_spacing_v: f64,
    /// `Y_N` in meters
    pub element_spacing_h: f64,
    /// `R_v`, vertical elements combined into one RF chain
    pub txru_rows: usize,
    pub cross_polarized: bool,
    /// Hz
    pub carrier_frequency: f64,
}

impl ArrayConfig {
    /// The evaluation array: one vertical panel of 8 elements per column folded into a
    /// single RF chain, two horizontal panels of two columns, cross-polarized, 900 MHz,
    /// with element spacings of 0.5λ (vertical) and 0.7λ (horizontal). `panel_distance`
    /// is in wavelengths.
    pub fn desk(panel_distance: f64) -> Self {
        let carrier_frequency = 900e6;
        let lambda = SPEED_OF_LIGHT / carrier_frequency;
        Self {
            panels_v: 1,
            panels_h: 2,
            elements_v: 8,
            elements_h: 2,
            panel_spacing_v: panel_distance * lambda,
            panel_spacing_h: panel_distance * lambda,
            element_spacing_v: 0.5 * lambda,
            element_spacing_h: 0.7 * lambda,
            txru_rows: 8,
            cross_polarized: true,
            carrier_frequency,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("panels_v", self.panels_v),
            ("panels_h", self.panels_h),
            ("elements_v", self.elements_v),
            ("elements_h", self.elements_h),
            ("txru_rows", self.txru_rows),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !self.elements_v.is_multiple_of(self.txru_rows) {
            return Err(Error::Config(format!(
                "elements_v ({}) is not divisible by txru_rows ({})",
                self.elements_v, self.txru_rows
            )));
        }
        for (name, v) in [("element_spacing_v", self.element_spacing_v), ("element_spacing_h", self.element_spacing_h)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("panel_spacing_v", self.panel_spacing_v), ("panel_spacing_h", self.panel_spacing_h)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative")));
            }
        }
        if !(self.carrier_frequency.is_finite() && self.carrier_frequency > 0.0) {
            return Err(Error::Config("carrier_frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// `M_v N_v`
    pub fn element_rows(&self) -> usize {
        self.panels_v * self.elements_v
    }

    /// `M_h N_h`
    pub fn element_cols(&self) -> usize {
        self.panels_h * self.elements_h
    }

    /// Physical elements per polarization.
    pub fn element_count(&self) -> usize {
        self.element_rows() * self.element_cols()
    }

    /// `N_v^R = N_v / R_v`
    pub fn rf_rows_per_panel(&self) -> usize {
        self.elements_v / self.txru_rows
    }

    /// `M_v N_v^R`, vertical antenna ports after the 1-to-M mapping.
    pub fn port_rows(&self) -> usize {
        self.panels_v * self.rf_rows_per_panel()
    }

    /// `M_h N_h`
    pub fn port_cols(&self) -> usize {
        self.element_cols()
    }

    pub fn polarizations(&self) -> usize {
        if self.cross_polarized {
            2
        } else {
            1
        }
    }

    pub fn ports_per_polarization(&self) -> usize {
        self.port_rows() * self.port_cols()
    }

    /// Length of the channel vector seen by the codebooks.
    pub fn port_count(&self) -> usize {
        self.polarizations() * self.ports_per_polarization()
    }

    /// `Δ_v^m` for a 1-based element row index `m ∈ 1..=M_v N_v`.
    pub fn vertical_offset(&self, m: usize) -> Result<f64> {
        ceil_offset(
            m,
            self.element_rows(),
            self.elements_v,
            self.panel_spacing_v,
            self.element_spacing_v,
            "vertical element index",
        )
    }

    /// `Δ_h^n` for a 1-based element column index `n ∈ 1..=M_h N_h`.
    pub fn horizontal_offset(&self, n: usize) -> Result<f64> {
        ceil_offset(
            n,
            self.element_cols(),
            self.elements_h,
            self.panel_spacing_h,
            self.element_spacing_h,
            "horizontal element index",
        )
    }
}

fn ceil_offset(
    idx: usize,
    len: usize,
    per_panel: usize,
    panel_spacing: f64,
    element_spacing: f64,
    what: &'static str,
) -> Result<f64> {
    if idx == 0 || idx > len {
        return Err(Error::IndexOutOfRange { what, index: idx as u64, size: len as u64 });
    }
    let panel = idx.div_ceil(per_panel);
    Ok(panel_spacing * (panel - 1) as f64 + element_spacing * (idx - panel) as f64)
}

/// Path-loss law in dB as a function of BS-user distance in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathlossModel {
    /// `intercept_db + slope_db * log10(r)`
    LogDistance { intercept_db: f64, slope_db: f64 },
    /// Distance-independent loss.
    Constant { loss_db: f64 },
}

impl Default for PathlossModel {
    fn default() -> Self {
        PathlossModel::LogDistance { intercept_db: 8.0, slope_db: 37.6 }
    }
}

impl PathlossModel {
    pub fn loss_db(&self, distance: f64) -> Result<f64> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::Domain(format!("distance must be positive, got {distance}")));
        }
        Ok(match *self {
            PathlossModel::LogDistance { intercept_db, slope_db } => intercept_db + slope_db * distance.log10(),
            PathlossModel::Constant { loss_db } => loss_db,
        })
    }
}

/// Propagation scenario shared by all users of a drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub users: usize,
    /// Ground distance BS-user, meters.
    pub ground_distance: f64,
    pub bs_height: f64,
    pub ue_height: f64,
    /// `S`
    pub paths: usize,
    /// Azimuth AOD interval `[lo, hi]` in radians.
    pub azimuth_range: (f64, f64),
    /// Zenith AOD interval `[lo, hi]` in radians.
    pub zenith_range: (f64, f64),
    pub pathloss: PathlossModel,
    /// Analog vertical steering angle. `None` points at the user ring.
    pub tilt: Option<f64>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            users: 3,
            ground_distance: 100.0,
            bs_height: 30.0,
            ue_height: 2.0,
            paths: 20,
            azimuth_range: (0.0, PI),
            zenith_range: (0.0, PI / 36.0),
            pathloss: PathlossModel::default(),
            tilt: None,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::Config("users must be at least 1".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("number of paths must be at least 1".into()));
        }
        for (name, (lo, hi)) in [("azimuth_range", self.azimuth_range), ("zenith_range", self.zenith_range)] {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::Config(format!("{name} [{lo}, {hi}] is empty")));
            }
        }
        if !(self.ground_distance.is_finite() && self.ground_distance >= 0.0) {
            return Err(Error::Config("ground_distance must be non-negative".into()));
        }
        if self.distance_3d() <= 0.0 {
            return Err(Error::Config("BS-user distance must be positive".into()));
        }
        Ok(())
    }

    /// `r_k`: straight-line BS-user distance.
    pub fn distance_3d(&self) -> f64 {
        self.ground_distance.hypot(self.bs_height - self.ue_height)
    }

    /// Steering angle of the 1-to-M weights, measured from the horizon.
    pub fn tilt_angle(&self) -> f64 {
        self.tilt.unwrap_or_else(|| (self.bs_height - self.ue_height).atan2(self.ground_distance))
    }
}

/// Paths of one user. Angles are shared by both polarizations, gains are not.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub azimuth: Vec<f64>,
    pub zenith: Vec<f64>,
    /// `gains[pol][path]`, circularly-symmetric unit-variance.
    pub gains: Vec<Vec<Complex64>>,
    /// Meters.
    pub distance: f64,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.azimuth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.azimuth.is_empty()
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Draws `S` independent paths: angles uniform over the scenario ranges, gains CN(0, 1).
pub fn sample_paths<R: Rng + ?Sized>(config: &ArrayConfig, scenario: &ScenarioParams, rng: &mut R) -> Result<PathSet> {
    scenario.validate()?;
    let s = scenario.paths;
    let mut azimuth = Vec::with_capacity(s);
    let mut zenith = Vec::with_capacity(s);
    for _ in 0..s {
        azimuth.push(uniform_in(rng, scenario.azimuth_range));
        zenith.push(uniform_in(rng, scenario.zenith_range));
    }
    let gains = (0..config.polarizations()).map(|_| (0..s).map(|_| complex_gaussian(rng)).collect()).collect();
    Ok(PathSet { azimuth, zenith, gains, distance: scenario.distance_3d() })
}

/// `ρ = z · 10^(−γ(r)/20)`
pub fn large_scale_coefficient(z: Complex64, distance: f64, pathloss: &PathlossModel) -> Result<Complex64> {
    let loss = pathloss.loss_db(distance)?;
    Ok(z * 10f64.powf(-loss / 20.0))
}

/// Element-domain channel of a single path, shape `M_v N_v × M_h N_h`.
pub fn channel_matrix_per_path(
    config: &ArrayConfig,
    azimuth: f64,
    zenith: f64,
    rho: Complex64,
) -> Result<DMatrix<Complex64>> {
    config.validate()?;
    let k = 2.0 * PI / config.wavelength();
    let rows = config.element_rows();
    let cols = config.element_cols();
    let (sin_az, cos_az) = azimuth.sin_cos();
    let cos_zen = zenith.cos();
    let row_phase: Vec<f64> =
        (1..=rows).map(|m| config.vertical_offset(m).map(|d| k * d * sin_az)).collect::<Result<_>>()?;
    let col_phase: Vec<f64> =
        (1..=cols).map(|n| config.horizontal_offset(n).map(|d| k * d * cos_zen * cos_az)).collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(rows, cols, |m, n| rho * Complex64::from_polar(1.0, -(row_phase[m] + col_phase[n]))))
}

/// `H = (1/√S) Σ_i H^i`
pub fn aggregate_channel(per_path: &[DMatrix<Complex64>]) -> Result<DMatrix<Complex64>> {
    let first = per_path.first().ok_or_else(|| Error::Shape("no path matrices to aggregate".into()))?;
    let shape = first.shape();
    let mut acc = DMatrix::<Complex64>::zeros(shape.0, shape.1);
    for m in per_path {
        if m.shape() != shape {
            return Err(Error::Shape(format!("path matrix shape {:?} differs from {:?}", m.shape(), shape)));
        }
        acc += m;
    }
    let scale = 1.0 / (per_path.len() as f64).sqrt();
    Ok(acc.map(|v| v * scale))
}

/// Column-major stacking scaled by `1/√element_count`.
pub fn vectorize_channel(h: &DMatrix<Complex64>, element_count: usize) -> Vec<Complex64> {
    let scale = 1.0 / (element_count as f64).sqrt();
    h.as_slice().iter().map(|v| v * scale).collect()
}

/// Vertical 1-to-M analog weight `u` of length `R_v`.
pub fn txru_weight(config: &ArrayConfig, tilt: f64) -> Result<Vec<Complex64>> {
    config.validate()?;
    let r = config.txru_rows;
    let k = 2.0 * PI / config.wavelength();
    let scale = 1.0 / (r as f64).sqrt();
    let cos_tilt = tilt.cos();
    (1..=r)
        .map(|m| {
            let delta = config.vertical_offset(m)?;
            let phase = -k * (m - 1) as f64 * delta * cos_tilt;
            Ok(Complex64::from_polar(scale, phase))
        })
        .collect()
}

/// Combines every `R_v` consecutive element rows into one port row: `u^H ȟ`.
///
/// Returns the port-domain matrix `H̃` of shape `M_v N_v^R × M_h N_h`.
pub fn apply_one_to_m(
    config: &ArrayConfig,
    h_full: &DMatrix<Complex64>,
    u: &[Complex64],
) -> Result<DMatrix<Complex64>> {
    config.validate()?;
    let r = config.txru_rows;
    if u.len() != r {
        return Err(Error::Shape(format!("1-to-M weight has length {}, expected {r}", u.len())));
    }
    if h_full.shape() != (config.element_rows(), config.element_cols()) {
        return Err(Error::Shape(format!(
            "element channel is {:?}, expected {:?}",
            h_full.shape(),
            (config.element_rows(), config.element_cols())
        )));
    }
    Ok(DMatrix::from_fn(config.port_rows(), config.port_cols(), |p, n| {
        u.iter().enumerate().map(|(i, w)| w.conj() * h_full[(p * r + i, n)]).sum()
    }))
}

/// Port-domain channel of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `h̃_k`, length [`ArrayConfig::port_count`].
    pub vector: Vec<Complex64>,
    pub config: ArrayConfig,
    pub distance: f64,
}

/// Builds `h̃_k` for one polarization-stacked path set.
pub fn realize_channel(
    config: &ArrayConfig,
    paths: &PathSet,
    pathloss: &PathlossModel,
    tilt: f64,
) -> Result<ChannelRealization> {
    config.validate()?;
    if paths.gains.len() != config.polarizations() {
        return Err(Error::Shape(format!(
            "path set carries {} polarizations, array has {}",
            paths.gains.len(),
            config.polarizations()
        )));
    }
    let u = txru_weight(config, tilt)?;
    let mut vector = Vec::with_capacity(config.port_count());
    for gains in &paths.gains {
        if gains.len() != paths.len() {
            return Err(Error::Shape("gain count differs from path count".into()));
        }
        let per_path = paths
            .azimuth
            .iter()
            .zip(&paths.zenith)
            .zip(gains)
            .map(|((&az, &zen), &z)| {
                let rho = large_scale_coefficient(z, paths.distance, pathloss)?;
                channel_matrix_per_path(config, az, zen, rho)
            })
            .collect::<Result<Vec<_>>>()?;
        let h = aggregate_channel(&per_path)?;
        let mapped = apply_one_to_m(config, &h, &u)?;
        vector.extend(vectorize_channel(&mapped, config.element_count()));
    }
    Ok(ChannelRealization { vector, config: *config, distance: paths.distance })
}

/// Independent drops for every user of the scenario.
pub fn draw_user_channels<R: Rng + ?Sized>(
    config: &ArrayConfig,
    scenario: &ScenarioParams,
    rng: &mut R,
) -> Result<Vec<ChannelRealization>> {
    let tilt = scenario.tilt_angle();
    (0..scenario.users)
        .map(|_| {
            let paths = sample_paths(config, scenario, rng)?;
            realize_channel(config, &paths, &scenario.pathloss, tilt)
        })
        .collect()
}
