//! Zero-forcing multi-user precoding and Monte-Carlo average sum-rate.
//!
//! Trial `t` draws its users from a generator seeded with `(seed, stream t)`,
//! so every scheme evaluated with the same seed sees the same channels and the
//! result does not depend on the number of worker threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_user_channels, ArrayConfig, ScenarioParams};
use crate::codebook::{
    AmplitudeAlphabet, BitAllocation, DftCodebook, LpCodebook, LpGeometry, PaSearch, PortGrid, TypeIiCodebook,
};
use crate::error::{Error, Result};
use crate::quantizer::{quantize_dft, quantize_lp, quantize_sp, SearchOptions};

/// Transmit power and receiver noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self { tx_power_dbm: 10.0, bandwidth_hz: 4e6, noise_figure_db: 3.0 }
    }
}

impl LinkBudget {
    pub fn noise_power_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    pub fn tx_power_mw(&self) -> f64 {
        dbm_to_mw(self.tx_power_dbm)
    }

    pub fn noise_power_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power_dbm())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        if !self.tx_power_dbm.is_finite() && self.tx_power_dbm != f64::NEG_INFINITY {
            return Err(Error::Config("transmit power must be finite".into()));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::Config("noise figure must be finite".into()));
        }
        Ok(())
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Precoding vectors, one per user.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub columns: Vec<Vec<Complex64>>,
    /// The channel Gram matrix was singular and had to be diagonally loaded.
    pub regularized: bool,
}

/// Relative pivot below which the Gram matrix is treated as singular.
const RANK_TOLERANCE: f64 = 1e-12;
const DIAGONAL_LOADING: f64 = 1e-10;

/// Zero-forcing directions `Ĥ(ĤᴴĤ)⁻¹`, unit-normalized per user and scaled
/// to an equal share of `power`.
pub fn zf_precoder(quantized: &[Vec<Complex64>], power: f64) -> Result<Precoder> {
    let k = quantized.len();
    if k == 0 {
        return Err(Error::Shape("no users to precode".into()));
    }
    let n = quantized[0].len();
    if quantized.iter().any(|h| h.len() != n) {
        return Err(Error::Shape("quantized channels differ in length".into()));
    }
    if k > n {
        return Err(Error::Config(format!("{k} users exceed {n} transmit ports")));
    }
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::Domain(format!("transmit power {power}")));
    }
    let h = DMatrix::from_fn(n, k, |r, c| quantized[c][r]);
    let gram = h.adjoint() * &h;
    let max_diag = (0..k).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    let chol = gram.clone().cholesky().filter(|c| {
        let l = c.l_dirty();
        (0..k).all(|i| l[(i, i)].norm_sqr() > RANK_TOLERANCE * max_diag)
    });
    let (inv, regularized) = match chol {
        Some(c) => (c.inverse(), false),
        None => {
            let scale = if max_diag > 0.0 { max_diag } else { 1.0 };
            let loaded = gram + DMatrix::identity(k, k) * Complex64::new(DIAGONAL_LOADING * scale, 0.0);
            let c =
                loaded.cholesky().ok_or_else(|| Error::Domain("loaded Gram matrix not positive definite".into()))?;
            (c.inverse(), true)
        }
    };
    let w = h * inv;
    let share = (power / k as f64).sqrt();
    let columns = (0..k)
        .map(|c| {
            let col: DVector<Complex64> = w.column(c).into_owned();
            let norm = col.norm();
            col.iter().map(|x| if norm > 0.0 { x * (share / norm) } else { Complex64::new(0.0, 0.0) }).collect()
        })
        .collect();
    Ok(Precoder { columns, regularized })
}

/// `Σ_k log2(1 + SINR_k)` on the true channels.
pub fn sum_rate(channels: &[Vec<Complex64>], precoder: &Precoder, noise_power: f64) -> Result<f64> {
    if channels.is_empty() || channels.len() != precoder.columns.len() {
        return Err(Error::Shape(format!("{} users, {} precoding vectors", channels.len(), precoder.columns.len())));
    }
    if precoder.columns.iter().chain(channels).any(|v| v.len() != channels[0].len()) {
        return Err(Error::Shape("precoder and channel lengths differ".into()));
    }
    let mut rate = 0.0;
    for (k, h) in channels.iter().enumerate() {
        let g = |w: &Vec<Complex64>| h.iter().zip(w).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr();
        let signal = g(&precoder.columns[k]);
        let interference: f64 = precoder.columns.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, w)| g(w)).sum();
        rate += (1.0 + signal / (interference + noise_power)).log2();
    }
    Ok(rate)
}

/// Feedback scheme compared in the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// DFT grid of `2^budget` beams over the whole array.
    Dft { budget: u32 },
    /// Type-II codebook treating the whole array as one panel.
    Sp { alloc: BitAllocation },
    /// Line-panel codebook.
    Lp { alloc: BitAllocation },
    /// Unquantized channel directions.
    PerfectCsi,
}

/// Codebook options shared by every scheme of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodebookOptions {
    pub beams: usize,
    pub amplitude: AmplitudeAlphabet,
    pub pa_search: PaSearch,
    pub search: SearchOptions,
}

impl Default for CodebookOptions {
    fn default() -> Self {
        Self {
            beams: 2,
            amplitude: AmplitudeAlphabet::default(),
            pa_search: PaSearch::default(),
            search: SearchOptions::default(),
        }
    }
}

/// A scheme with its codebook built for one array.
#[derive(Debug, Clone)]
pub enum Quantizer {
    Dft(DftCodebook),
    Sp(TypeIiCodebook),
    Lp(LpCodebook),
    Perfect,
}

impl Quantizer {
    pub fn build(config: &ArrayConfig, scheme: &Scheme, opts: &CodebookOptions) -> Result<Self> {
        let type_ii = || {
            if !config.cross_polarized {
                return Err(Error::Config("Type-II codebooks need a cross-polarized array".into()));
            }
            Ok(())
        };
        Ok(match scheme {
            Scheme::Dft { budget } => {
                Quantizer::Dft(DftCodebook::new(PortGrid::full_array(config), config.polarizations(), *budget)?)
            }
            Scheme::Sp { alloc } => {
                type_ii()?;
                Quantizer::Sp(TypeIiCodebook::new(PortGrid::full_array(config), opts.beams, *alloc, opts.amplitude)?)
            }
            Scheme::Lp { alloc } => {
                type_ii()?;
                let geo = LpGeometry::from_config(config, opts.beams);
                Quantizer::Lp(LpCodebook::new(&geo, *alloc, opts.amplitude, opts.pa_search)?)
            }
            Scheme::PerfectCsi => Quantizer::Perfect,
        })
    }

    /// Unit-norm channel estimate fed back for `h`.
    pub fn quantize(&self, h: &[Complex64], search: &SearchOptions) -> Result<Vec<Complex64>> {
        Ok(match self {
            Quantizer::Dft(cb) => quantize_dft(h, cb, search)?.codeword.vector,
            Quantizer::Sp(cb) => quantize_sp(h, cb, search)?.codeword.vector,
            Quantizer::Lp(cb) => quantize_lp(h, cb, search)?.codeword.vector,
            Quantizer::Perfect => {
                let norm = h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::Domain("zero channel has no direction".into()));
                }
                h.iter().map(|x| x / norm).collect()
            }
        })
    }
}

/// Mean and 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub half_width: f64,
    pub trials: usize,
}

impl Summary {
    /// Half-width is NaN for a single sample.
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        let mean = pairwise_sum(x) / n as f64;
        let half_width = if n > 1 {
            let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
            let var = pairwise_sum(&dev) / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, half_width, trials: n }
    }

    /// Summary of the per-trial differences `a − b`.
    pub fn paired(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("paired samples differ in length".into()));
        }
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Ok(Self::from_samples(&d))
    }
}

fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        x.iter().sum()
    } else {
        let (a, b) = x.split_at(x.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Per-trial sum-rates of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub rates: Vec<f64>,
    pub regularized: usize,
}

impl Samples {
    pub fn summary(&self) -> Summary {
        Summary::from_samples(&self.rates)
    }
}

/// One output row of a sum-rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRateReport {
    pub scheme: String,
    pub budget: Option<u32>,
    pub alloc: Option<BitAllocation>,
    pub panel_distance: f64,
    pub mean: f64,
    pub half_width: f64,
    pub trials: usize,
    pub seed: u64,
    /// Trials in which the precoder had to be regularized.
    pub regularized: usize,
}

/// Generator of trial `t` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Monte-Carlo driver over i.i.d. user drops.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub config: ArrayConfig,
    pub scenario: ScenarioParams,
    pub link: LinkBudget,
    pub trials: usize,
    pub seed: u64,
}

/// User channels of every trial, drawn once and shared by all schemes.
pub type ChannelBank = Vec<Vec<Vec<Complex64>>>;

impl MonteCarlo {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.config.validate()?;
        self.scenario.validate()?;
        self.link.validate()
    }

    pub fn draw_trial(&self, trial: u64) -> Result<Vec<Vec<Complex64>>> {
        let mut rng = trial_rng(self.seed, trial);
        Ok(draw_user_channels(&self.config, &self.scenario, &mut rng)?.into_iter().map(|c| c.vector).collect())
    }

    pub fn channel_bank(&self) -> Result<ChannelBank> {
        self.validate()?;
        (0..self.trials as u64).into_par_iter().map(|t| self.draw_trial(t)).collect()
    }

    /// Per-trial sum-rates of every quantizer on a shared channel bank.
    pub fn run_bank(
        &self,
        bank: &ChannelBank,
        quantizers: &[Quantizer],
        search: &SearchOptions,
    ) -> Result<Vec<Samples>> {
        let power = self.link.tx_power_mw();
        let noise = self.link.noise_power_mw();
        let per_trial: Vec<Vec<(f64, bool)>> = bank
            .par_iter()
            .map(|users| {
                quantizers
                    .iter()
                    .map(|q| {
                        let est = users.iter().map(|h| q.quantize(h, search)).collect::<Result<Vec<_>>>()?;
                        let w = zf_precoder(&est, power)?;
                        Ok((sum_rate(users, &w, noise)?, w.regularized))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok((0..quantizers.len())
            .map(|s| Samples {
                rates: per_trial.iter().map(|t| t[s].0).collect(),
                regularized: per_trial.iter().filter(|t| t[s].1).count(),
            })
            .collect())
    }

    pub fn run(&self, schemes: &[Scheme], opts: &CodebookOptions) -> Result<Vec<Samples>> {
        let quantizers = schemes.iter().map(|s| Quantizer::build(&self.config, s, opts)).collect::<Result<Vec<_>>>()?;
        let bank = self.channel_bank()?;
        self.run_bank(&bank, &quantizers, &opts.search)
    }
}

/// Average sum-rate of one scheme.
pub fn monte_carlo(scheme: &Scheme, mc: &MonteCarlo, opts: &CodebookOptions) -> Result<SumRateReport> {
    let samples = mc.run(std::slice::from_ref(scheme), opts)?.remove(0);
    let s = samples.summary();
    let (budget, alloc) = match scheme {
        Scheme::Dft { budget } => (Some(*budget), None),
        Scheme::Sp { alloc } => (None, Some(*alloc)),
        Scheme::Lp { alloc } => (None, Some(*alloc)),
        Scheme::PerfectCsi => (None, None),
    };
    Ok(SumRateReport {
        scheme: scheme_name(scheme).into(),
        budget,
        alloc,
        panel_distance: mc.config.panel_spacing_h / mc.config.wavelength(),
        mean: s.mean,
        half_width: s.half_width,
        trials: s.trials,
        seed: mc.seed,
        regularized: samples.regularized,
    })
}

pub fn scheme_name(scheme: &Scheme) -> &'static str {
    match scheme {
        Scheme::Dft { .. } => "dft",
        Scheme::Sp { .. } => "sp",
        Scheme::Lp { .. } => "lp",
        Scheme::PerfectCsi => "perfect",
    }
}
