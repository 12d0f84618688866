//! Experiment driver behind the `mpa-sim` binary.
//!
//! A run is described by one TOML file whose defaults reproduce the desk-scale
//! evaluation setup, so `mpa-sim simulate` with no config is a complete run.
//! Every output carries the seed and a hash of the effective configuration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitalloc::{run_algorithm1, AllocBounds, AllocEnv, DqnParams, LogRow, LpSumRate};
use crate::channel::{ArrayConfig, ScenarioParams, SPEED_OF_LIGHT};
use crate::codebook::{complexity_rows, BitAllocation, ComplexityRow, LpGeometry, PortGrid};
use crate::evaluate::{CodebookOptions, LinkBudget, MonteCarlo, Quantizer, Scheme, Summary};

/// Version tag of every CSV and JSON output.
pub const SCHEMA_VERSION: &str = "v1";

/// Array geometry with spacings in wavelengths. The panel distance is set per
/// experiment point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySettings {
    pub panels_v: usize,
    pub panels_h: usize,
    pub elements_v: usize,
    pub elements_h: usize,
    pub txru_rows: usize,
    pub element_spacing_v: f64,
    pub element_spacing_h: f64,
    pub cross_polarized: bool,
    /// Hz
    pub carrier_frequency: f64,
}

impl Default for ArraySettings {
    fn default() -> Self {
        Self {
            panels_v: 1,
            panels_h: 2,
            elements_v: 8,
            elements_h: 2,
            txru_rows: 8,
            element_spacing_v: 0.5,
            element_spacing_h: 0.7,
            cross_polarized: true,
            carrier_frequency: 900e6,
        }
    }
}

impl ArraySettings {
    /// The array with panels `panel_distance` wavelengths apart.
    pub fn at(&self, panel_distance: f64) -> ArrayConfig {
        let lambda = SPEED_OF_LIGHT / self.carrier_frequency;
        ArrayConfig {
            panels_v: self.panels_v,
            panels_h: self.panels_h,
            elements_v: self.elements_v,
            elements_h: self.elements_h,
            panel_spacing_v: panel_distance * lambda,
            panel_spacing_h: panel_distance * lambda,
            element_spacing_v: self.element_spacing_v * lambda,
            element_spacing_h: self.element_spacing_h * lambda,
            txru_rows: self.txru_rows,
            cross_polarized: self.cross_polarized,
            carrier_frequency: self.carrier_frequency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "dft")]
    Dft,
    #[serde(rename = "sp")]
    Sp,
    #[serde(rename = "lp-3gpp")]
    Lp3gpp,
    /// Allocation read from a training record.
    #[serde(rename = "lp-rl")]
    LpRl,
    #[serde(rename = "perfect")]
    Perfect,
}

impl SchemeId {
    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Dft => "dft",
            SchemeId::Sp => "sp",
            SchemeId::Lp3gpp => "lp-3gpp",
            SchemeId::LpRl => "lp-rl",
            SchemeId::Perfect => "perfect",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub budgets: Vec<u32>,
    /// Monte-Carlo trials per rate estimate during training.
    pub trials: usize,
    /// Allow components below the standard alphabet sizes.
    pub reduced: bool,
    pub dqn: DqnParams,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self { budgets: vec![36, 40, 44, 48], trials: 200, reduced: false, dqn: DqnParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Monte-Carlo trials per reported sum-rate.
    pub trials: usize,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
    /// Budgets of the complexity table and the sum-rate-versus-budget sweep.
    pub budgets: Vec<u32>,
    /// Panel distance in wavelengths for the budget sweep and training.
    pub panel_distance: f64,
    /// Budget of the panel-distance sweep.
    pub budget: u32,
    pub panel_distances: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    /// Training record read by `lp-rl`; defaults to `best_alloc.json` in the
    /// output directory.
    pub alloc_file: Option<PathBuf>,
    pub array: ArraySettings,
    pub scenario: ScenarioParams,
    pub link: LinkBudget,
    pub codebook: CodebookOptions,
    pub train: TrainSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 1000,
            threads: 0,
            budgets: vec![24, 28, 32, 36, 40, 44, 48],
            panel_distance: 2.0,
            budget: 40,
            panel_distances: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            schemes: vec![SchemeId::Dft, SchemeId::Sp, SchemeId::Lp3gpp, SchemeId::LpRl],
            alloc_file: None,
            array: ArraySettings::default(),
            scenario: ScenarioParams::default(),
            link: LinkBudget::default(),
            codebook: CodebookOptions::default(),
            train: TrainSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> anyhow::Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials == 0 {
            bail!("trials: must be at least 1");
        }
        if self.seed > i64::MAX as u64 {
            bail!("seed: must fit in a signed 64-bit integer");
        }
        for (i, d) in std::iter::once(self.panel_distance).chain(self.panel_distances.iter().copied()).enumerate() {
            if !(d.is_finite() && d >= 0.0) {
                let field = if i == 0 { "panel_distance".to_string() } else { format!("panel_distances[{}]", i - 1) };
                bail!("{field}: must be a non-negative number of wavelengths, got {d}");
            }
        }
        if self.schemes.is_empty() {
            bail!("schemes: list at least one scheme");
        }
        self.array.at(self.panel_distance).validate().context("array")?;
        self.scenario.validate().context("scenario")?;
        self.link.validate().context("link")?;
        if self.scenario.users > self.array.at(0.0).port_count() {
            bail!("scenario.users: {} users exceed {} ports", self.scenario.users, self.array.at(0.0).port_count());
        }
        if !(2..=4).contains(&self.codebook.beams) {
            bail!("codebook.beams: must be 2, 3 or 4");
        }
        if self.train.trials == 0 {
            bail!("train.trials: must be at least 1");
        }
        self.train.dqn.validate().context("train.dqn")?;
        Ok(())
    }

    fn monte_carlo(&self, panel_distance: f64, trials: usize) -> MonteCarlo {
        MonteCarlo {
            config: self.array.at(panel_distance),
            scenario: self.scenario,
            link: self.link,
            trials,
            seed: self.seed,
        }
    }
}

/// Best allocation found by `train` for one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub schema: String,
    pub budget: u32,
    pub panel_distance: f64,
    pub alloc: BitAllocation,
    /// Bits actually used by `alloc`.
    pub report_bits: u64,
    /// Average sum-rate at the reporting trial count.
    pub rate: f64,
    pub half_width: f64,
    pub trials: usize,
    pub training_rate: f64,
    pub training_trials: usize,
    pub steps: usize,
    /// Starting allocation and reference of the reward.
    pub baseline: BitAllocation,
    pub baseline_rate: f64,
    pub baseline_half_width: f64,
    pub seed: u64,
    pub config_hash: String,
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<AllocationRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading allocation file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing allocation file {}", path.display()))
}

/// One sum-rate point.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRateRow {
    pub scheme: SchemeId,
    pub budget: u32,
    pub panel_distance: f64,
    pub alloc: Option<BitAllocation>,
    pub summary: Summary,
}

pub fn cmd_complexity(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ComplexityRow>> {
    if cfg.budgets.is_empty() {
        bail!("budgets: the sweep is empty");
    }
    Ok(complexity_rows(&cfg.array.at(cfg.panel_distance), cfg.codebook.beams, &cfg.budgets)?)
}

fn scheme_at(
    id: SchemeId,
    budget: u32,
    config: &ArrayConfig,
    beams: usize,
    records: &[AllocationRecord],
) -> anyhow::Result<Option<Scheme>> {
    let geo = LpGeometry::from_config(config, beams);
    Ok(match id {
        SchemeId::Dft => Some(Scheme::Dft { budget }),
        SchemeId::Sp => BitAllocation::three_gpp_sp(budget, PortGrid::full_array(config), beams)
            .ok()
            .map(|alloc| Scheme::Sp { alloc }),
        SchemeId::Lp3gpp => BitAllocation::three_gpp_lp(budget, &geo).ok().map(|alloc| Scheme::Lp { alloc }),
        SchemeId::LpRl => match records.iter().find(|r| r.budget == budget) {
            Some(r) => Some(Scheme::Lp { alloc: r.alloc }),
            None if BitAllocation::three_gpp_lp(budget, &geo).is_err() => None,
            None => bail!("lp-rl: the allocation file has no record for B = {budget}; run `train` with that budget"),
        },
        SchemeId::Perfect => Some(Scheme::PerfectCsi),
    })
}

/// Every configured scheme at every budget, on one shared channel bank.
pub fn sum_rates(
    cfg: &ExperimentConfig,
    panel_distance: f64,
    budgets: &[u32],
    records: &[AllocationRecord],
) -> anyhow::Result<Vec<SumRateRow>> {
    let mc = cfg.monte_carlo(panel_distance, cfg.trials);
    let mut points = Vec::new();
    for &budget in budgets {
        for &id in &cfg.schemes {
            match scheme_at(id, budget, &mc.config, cfg.codebook.beams, records)? {
                Some(s) => points.push((id, budget, s)),
                None => log::warn!("{} has no standard allocation at B = {budget}, skipped", id.name()),
            }
        }
    }
    let quantizers = points
        .iter()
        .map(|(_, _, s)| Quantizer::build(&mc.config, s, &cfg.codebook))
        .collect::<crate::Result<Vec<_>>>()?;
    let bank = mc.channel_bank()?;
    let samples = mc.run_bank(&bank, &quantizers, &cfg.codebook.search)?;
    Ok(points
        .into_iter()
        .zip(samples)
        .map(|((scheme, budget, s), samples)| SumRateRow {
            scheme,
            budget,
            panel_distance,
            alloc: match s {
                Scheme::Sp { alloc } | Scheme::Lp { alloc } => Some(alloc),
                _ => None,
            },
            summary: samples.summary(),
        })
        .collect())
}

/// Sum-rate versus budget at the configured panel distance.
pub fn cmd_simulate(cfg: &ExperimentConfig, records: &[AllocationRecord]) -> anyhow::Result<Vec<SumRateRow>> {
    if cfg.budgets.is_empty() {
        bail!("budgets: the sweep is empty");
    }
    sum_rates(cfg, cfg.panel_distance, &cfg.budgets, records)
}

/// Sum-rate versus panel distance at the configured budget.
pub fn cmd_sweep(cfg: &ExperimentConfig, records: &[AllocationRecord]) -> anyhow::Result<Vec<SumRateRow>> {
    if cfg.panel_distances.is_empty() {
        bail!("panel_distances: the sweep is empty");
    }
    let mut rows = Vec::new();
    for &d in &cfg.panel_distances {
        rows.extend(sum_rates(cfg, d, &[cfg.budget], records)?);
    }
    Ok(rows)
}

pub struct TrainOutput {
    pub record: AllocationRecord,
    pub log: Vec<LogRow>,
}

/// Trains the allocation agent for every configured budget.
pub fn cmd_train(cfg: &ExperimentConfig) -> anyhow::Result<Vec<TrainOutput>> {
    if cfg.train.budgets.is_empty() {
        bail!("train.budgets: no budget to train for");
    }
    let hash = cfg.hash()?;
    let config = cfg.array.at(cfg.panel_distance);
    let geo = LpGeometry::from_config(&config, cfg.codebook.beams);
    let bounds = if cfg.train.reduced { AllocBounds::reduced() } else { AllocBounds::standard() };
    let mut out = Vec::new();
    for &budget in &cfg.train.budgets {
        let env = AllocEnv::new(geo, budget, bounds).with_context(|| {
            if cfg.train.reduced {
                "train.budgets".to_string()
            } else {
                "train.budgets (set train.reduced = true to search below the standard alphabet sizes)".to_string()
            }
        })?;
        let mut oracle = LpSumRate::new(cfg.monte_carlo(cfg.panel_distance, cfg.train.trials), cfg.codebook)?;
        let run = run_algorithm1(&env, &mut oracle, &cfg.train.dqn, cfg.seed)?;
        let mut report = LpSumRate::new(cfg.monte_carlo(cfg.panel_distance, cfg.trials), cfg.codebook)?;
        let best = report.summary(run.best)?;
        let base = report.summary(run.initial)?;
        out.push(TrainOutput {
            record: AllocationRecord {
                schema: SCHEMA_VERSION.into(),
                budget,
                panel_distance: cfg.panel_distance,
                alloc: run.best,
                report_bits: run.best.lp_bits(&geo),
                rate: best.mean,
                half_width: best.half_width,
                trials: best.trials,
                training_rate: run.best_rate,
                training_trials: cfg.train.trials,
                steps: run.log.len(),
                baseline: run.initial,
                baseline_rate: base.mean,
                baseline_half_width: base.half_width,
                seed: cfg.seed,
                config_hash: hash.clone(),
            },
            log: run.log,
        });
    }
    Ok(out)
}

/// `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn provenance(command: &str, cfg: &ExperimentConfig) -> anyhow::Result<String> {
    Ok(format!("# mpa-sim {command} schema={SCHEMA_VERSION} seed={} config_hash={}\n", cfg.seed, cfg.hash()?))
}

fn csv_bytes(header: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(header.as_bytes().to_vec());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner()?)
}

pub fn complexity_csv(cfg: &ExperimentConfig, rows: &[ComplexityRow]) -> anyhow::Result<Vec<u8>> {
    csv_bytes(
        &provenance("complexity", cfg)?,
        &["family", "B", "omega"],
        rows.iter().map(|r| vec![r.family.to_string(), r.budget.to_string(), r.omega.to_string()]),
    )
}

pub const SUM_RATE_COLUMNS: [&str; 12] =
    ["scheme", "B", "d_M", "b_lp", "b_v", "b_h", "b_p", "b_c", "mean", "half_width", "trials", "seed"];

pub fn sum_rate_csv(command: &str, cfg: &ExperimentConfig, rows: &[SumRateRow]) -> anyhow::Result<Vec<u8>> {
    csv_bytes(
        &provenance(command, cfg)?,
        &SUM_RATE_COLUMNS,
        rows.iter().map(|r| {
            let alloc: Vec<String> = match r.alloc {
                Some(a) => a.components().iter().map(|c| c.to_string()).collect(),
                None => vec![String::new(); 5],
            };
            let mut v = vec![r.scheme.name().to_string(), r.budget.to_string(), r.panel_distance.to_string()];
            v.extend(alloc);
            v.extend([
                sig6(r.summary.mean),
                sig6(r.summary.half_width),
                r.summary.trials.to_string(),
                cfg.seed.to_string(),
            ]);
            v
        }),
    )
}

pub fn training_log_csv(cfg: &ExperimentConfig, log: &[LogRow]) -> anyhow::Result<Vec<u8>> {
    csv_bytes(
        &provenance("train", cfg)?,
        &["step", "b_lp", "b_v", "b_h", "b_p", "b_c", "action", "reward", "G", "G_max", "epsilon", "loss"],
        log.iter().map(|r| {
            vec![
                r.step.to_string(),
                r.b_lp.to_string(),
                r.b_v.to_string(),
                r.b_h.to_string(),
                r.b_p.to_string(),
                r.b_c.to_string(),
                r.action.to_string(),
                sig6(r.reward),
                sig6(r.g),
                sig6(r.g_max),
                sig6(r.epsilon),
                r.loss.map(sig6).unwrap_or_default(),
            ]
        }),
    )
}

#[derive(Debug, Parser)]
#[command(name = "mpa-sim", version, about = "Codebook and bit-allocation experiments for multi-panel arrays")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Search-space size per codebook family over the budget sweep.
    Complexity,
    /// Average sum-rate versus feedback budget.
    Simulate,
    /// Train the bit-allocation agent.
    Train,
    /// Average sum-rate versus panel distance.
    Sweep,
}

/// Effective configuration: file or defaults, then command-line overrides.
pub fn resolve_config(args: &GlobalArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn print_rows(rows: &[SumRateRow]) {
    for r in rows {
        println!(
            "{:>8} B={:<3} d_M={:<4} {:>10} ± {}",
            r.scheme.name(),
            r.budget,
            r.panel_distance,
            sig6(r.summary.mean),
            sig6(r.summary.half_width)
        );
    }
}

/// Runs one subcommand and writes its outputs under `args.out`.
pub fn run(command: Command, args: &GlobalArgs) -> anyhow::Result<()> {
    let cfg = resolve_config(args)?;
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    let out = &args.out;
    let alloc_path = cfg.alloc_file.clone().unwrap_or_else(|| out.join("best_alloc.json"));
    let records = || -> anyhow::Result<Vec<AllocationRecord>> {
        if !cfg.schemes.contains(&SchemeId::LpRl) {
            return Ok(Vec::new());
        }
        if !alloc_path.exists() {
            bail!(
                "lp-rl needs an allocation file: {} does not exist (run `train` first or set alloc_file)",
                alloc_path.display()
            );
        }
        read_records(&alloc_path)
    };
    println!("config hash {} seed {}", cfg.hash()?, cfg.seed);
    match command {
        Command::Complexity => {
            let rows = cmd_complexity(&cfg)?;
            let bytes = complexity_csv(&cfg, &rows)?;
            fs::create_dir_all(out)?;
            for r in &rows {
                println!("{:>6} B={:<3} omega={}", r.family, r.budget, r.omega);
            }
            write(&out.join("complexity.csv"), &bytes)
        }
        Command::Simulate => {
            let rows = cmd_simulate(&cfg, &records()?)?;
            let bytes = sum_rate_csv("simulate", &cfg, &rows)?;
            fs::create_dir_all(out)?;
            print_rows(&rows);
            write(&out.join("sumrate_vs_budget.csv"), &bytes)
        }
        Command::Sweep => {
            let rows = cmd_sweep(&cfg, &records()?)?;
            let bytes = sum_rate_csv("sweep", &cfg, &rows)?;
            fs::create_dir_all(out)?;
            print_rows(&rows);
            write(&out.join("sumrate_vs_distance.csv"), &bytes)
        }
        Command::Train => {
            let results = cmd_train(&cfg)?;
            fs::create_dir_all(out)?;
            for t in &results {
                let r = &t.record;
                println!(
                    "B={} best {:?} rate {} ± {} (baseline {:?}: {} ± {}) after {} steps",
                    r.budget,
                    r.alloc.components(),
                    sig6(r.rate),
                    sig6(r.half_width),
                    r.baseline.components(),
                    sig6(r.baseline_rate),
                    sig6(r.baseline_half_width),
                    r.steps
                );
                write(&out.join(format!("train_log_B{}.csv", r.budget)), &training_log_csv(&cfg, &t.log)?)?;
            }
            let records: Vec<_> = results.into_iter().map(|t| t.record).collect();
            write(&alloc_path, serde_json::to_string_pretty(&records)?.as_bytes())
        }
    }
}
