//! Command-line interface. The parsed [`Cli`] doubles as the run
//! configuration and serializes to JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasecon_core::analysis::{
    mismatch_matrix_with, snr_gap, sweep_with, Abscissa, Campaign, CapacityEvaluator, Design,
};
use phasecon_core::annealer::SaConfig;
use phasecon_core::capacity::{LikelihoodRoute, Objective};
use phasecon_core::model::{reference_constellation, ChannelParams, Constellation, ReferenceKind, Ring};
use phasecon_core::quadrature::{PhaseRule, QuadratureGrid, DEFAULT_DEGREE};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::format::{read_constellation, write_constellation, write_text, EvaluationReport, Meta};
use crate::parallel::{self, thread_pool, ParallelQuadrature};
use crate::tables::{write_curve, write_manifest, write_mismatch, write_trace, ManifestRow};

/// Agreement threshold between quadrature and Monte Carlo, in bits, before
/// the statistical allowance of three standard errors.
pub const VALIDATION_TOLERANCE: f64 = 0.03;

#[derive(Parser, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[command(
    name = "phasecon",
    version,
    about = "Evaluate and design constellations for AWGN channels with Tikhonov phase noise",
    after_help = "Worker threads: PHASECON_THREADS (unset or 0 = one per CPU). Log level: RUST_LOG."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// AMI or PAMI of a constellation file by quadrature (JSON on stdout)
    Evaluate(EvaluateArgs),
    /// Anneal a new constellation
    Optimize(OptimizeArgs),
    /// Compare quadrature with the Monte Carlo estimate (exit 1 on disagreement)
    Validate(ValidateArgs),
    /// Capacity curve over SNR or PNSD (CSV)
    Sweep(SweepArgs),
    /// One annealing run per (SNR, PNSD) cell
    Campaign(CampaignArgs),
    /// Evaluate designs on a grid of channels (CSV)
    Mismatch(MismatchArgs),
    /// Write a PSK, QAM or APSK constellation
    Reference(ReferenceArgs),
    /// SNR gap between the AMI curve of one design and the PAMI curve of another
    Gap(GapArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveArg {
    Ami,
    Pami,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Ami => Objective::Ami,
            ObjectiveArg::Pami => Objective::Pami,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseRuleArg {
    Tikhonov,
    Gaussian,
}

impl From<PhaseRuleArg> for PhaseRule {
    fn from(r: PhaseRuleArg) -> Self {
        match r {
            PhaseRuleArg::Tikhonov => PhaseRule::Tikhonov,
            PhaseRuleArg::Gaussian => PhaseRule::Gaussian,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelArgs {
    /// Signal-to-noise ratio in dB
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: f64,
    /// Phase-noise standard deviation in degrees (0 = no phase noise)
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub pnsd_deg: f64,
}

impl ChannelArgs {
    pub fn params(&self) -> CliResult<ChannelParams> {
        Ok(ChannelParams::from_snr_pnsd(self.snr_db, self.pnsd_deg)?)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadArgs {
    /// Gauss-Hermite nodes per noise dimension (1..=30)
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    pub quad_degree: usize,
    /// Weighting of the phase dimension
    #[arg(long, value_enum, default_value_t = PhaseRuleArg::Tikhonov)]
    pub phase_rule: PhaseRuleArg,
}

impl QuadArgs {
    pub fn grid(&self) -> CliResult<QuadratureGrid> {
        Ok(QuadratureGrid::new(self.quad_degree)?)
    }

    pub fn evaluator(&self) -> CliResult<ParallelQuadrature> {
        Ok(ParallelQuadrature::new(self.grid()?, self.phase_rule.into(), thread_pool(None)?))
    }
}

fn sa_default() -> SaConfig {
    SaConfig::default()
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaArgs {
    /// Total annealing steps over all passes
    #[arg(long, default_value_t = sa_default().iterations)]
    pub iterations: usize,
    /// Initial temperature (bits)
    #[arg(long, default_value_t = sa_default().t_initial)]
    pub t_initial: f64,
    /// Final temperature (bits)
    #[arg(long, default_value_t = sa_default().t_final)]
    pub t_final: f64,
    /// Initial maximum displacement
    #[arg(long, default_value_t = sa_default().d_initial)]
    pub d_initial: f64,
    /// Final maximum displacement
    #[arg(long, default_value_t = sa_default().d_final)]
    pub d_final: f64,
    /// Probability of a label swap per step (PAMI only)
    #[arg(long, default_value_t = sa_default().label_swap_prob)]
    pub label_swap_prob: f64,
    /// Extra passes restarted from the best constellation
    #[arg(long, default_value_t = sa_default().reanneal_count)]
    pub reanneal_count: usize,
    /// Trace sampling interval in steps
    #[arg(long, default_value_t = sa_default().record_every)]
    pub record_every: usize,
}

impl SaArgs {
    pub fn config(&self, seed: u64) -> CliResult<SaConfig> {
        let cfg = SaConfig {
            iterations: self.iterations,
            t_initial: self.t_initial,
            t_final: self.t_final,
            d_initial: self.d_initial,
            d_final: self.d_final,
            label_swap_prob: self.label_swap_prob,
            seed,
            reanneal_count: self.reanneal_count,
            record_every: self.record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Constellation JSON file
    pub file: PathBuf,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ami)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Also write the JSON report here
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeArgs {
    /// Number of points (power of two)
    #[arg(long)]
    pub m_points: usize,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ami)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sa: SaArgs,
    /// Start from this constellation instead of a random one
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Output constellation JSON
    #[arg(long, default_value = "constellation.json")]
    pub output: PathBuf,
    /// Annealing trace CSV
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateArgs {
    /// Constellation JSON file
    pub file: PathBuf,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ami)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Monte Carlo sample count (at least 1000)
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Snr,
    Pnsd,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Constellation JSON file
    pub file: PathBuf,
    /// Swept quantity
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    /// Fixed SNR in dB (required for a PNSD sweep)
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Fixed PNSD in degrees for an SNR sweep
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub pnsd_deg: f64,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ami)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignArgs {
    #[arg(long)]
    pub m_points: usize,
    /// Comma-separated design SNRs in dB
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub snr_list: Vec<f64>,
    /// Comma-separated design PNSDs in degrees
    #[arg(long, value_delimiter = ',', required = true)]
    pub pnsd_list: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ami)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Base seed; each cell derives its own
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sa: SaArgs,
    /// Start each cell from the previous cell's design
    #[arg(long, default_value_t = false)]
    pub chain: bool,
    /// Directory receiving one JSON per cell and manifest.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchArgs {
    /// Design files or directories of them; designs need snr_db and
    /// pnsd_deg in their meta
    #[arg(long, num_args = 1.., required = true)]
    pub designs: Vec<PathBuf>,
    /// Comma-separated evaluation SNRs in dB
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub eval_snr_list: Vec<f64>,
    /// Comma-separated evaluation PNSDs in degrees
    #[arg(long, value_delimiter = ',', required = true)]
    pub eval_pnsd_list: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ami)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Psk,
    Qam,
    Apsk,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Number of points (APSK: defaults to the ring total)
    #[arg(long)]
    pub m_points: Option<usize>,
    /// APSK rings as `points:radius[:phase_deg]`, comma-separated; ring
    /// sizes must be powers of two
    #[arg(long)]
    pub rings: Option<String>,
    /// Output JSON (stdout when absent)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapArgs {
    /// Design whose AMI curve is the reference
    #[arg(long)]
    pub ami: PathBuf,
    /// Design whose PAMI curve is compared
    #[arg(long)]
    pub pami: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub pnsd_deg: f64,
    /// Target rate in bits per symbol
    #[arg(long, default_value_t = 2.5)]
    pub target_bits: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn emit_or_write(out: &mut dyn Write, path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_text(p, text),
        None => emit(out, text),
    }
}

/// Runs a parsed command, writing primary output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Evaluate(a) => evaluate(a, out),
        Command::Optimize(a) => optimize(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Campaign(a) => campaign(a, out),
        Command::Mismatch(a) => mismatch(a, out),
        Command::Reference(a) => reference(a, out),
        Command::Gap(a) => gap(a, out),
    }
}

fn quad_report(r: &phasecon_core::capacity::CapacityResult, quad: &QuadArgs) -> EvaluationReport {
    let mut report = EvaluationReport::new(r);
    report.quad_degree = Some(quad.quad_degree);
    report.phase_rule = Some(rule_name(quad.phase_rule).to_owned());
    report
}

fn rule_name(rule: PhaseRuleArg) -> &'static str {
    match rule {
        PhaseRuleArg::Tikhonov => "tikhonov",
        PhaseRuleArg::Gaussian => "gaussian",
    }
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let (c, _) = read_constellation(&a.file)?;
    let params = a.channel.params()?;
    let c = unit_power(c, &a.file)?;
    let r = a.quad.evaluator()?.evaluate(&c, &params, a.objective.into())?;
    let text = quad_report(&r, &a.quad).to_json();
    if let Some(path) = &a.output {
        write_text(path, &text)?;
    }
    emit(out, &text)
}

/// Files must already be normalized; a silent rescale would hide mistakes.
fn unit_power(c: Constellation, path: &Path) -> CliResult<Constellation> {
    if c.is_unit_power() {
        Ok(c)
    } else {
        Err(CliError::format_in(path, format!("average power {} is not 1", c.average_power())))
    }
}

fn sa_meta(sa: &SaConfig) -> serde_json::Value {
    json!({
        "iterations": sa.iterations,
        "t_initial": sa.t_initial,
        "t_final": sa.t_final,
        "d_initial": sa.d_initial,
        "d_final": sa.d_final,
        "label_swap_prob": sa.label_swap_prob,
        "reanneal_count": sa.reanneal_count,
    })
}

#[allow(clippy::too_many_arguments)]
fn design_meta(
    objective: Objective,
    snr_db: f64,
    pnsd_deg: f64,
    seed: u64,
    bits: f64,
    c: &Constellation,
    quad: &QuadArgs,
    sa: &SaConfig,
) -> Meta {
    let mut meta = Meta {
        objective: Some(objective),
        snr_db: Some(snr_db),
        pnsd_deg: Some(pnsd_deg),
        seed: Some(seed),
        ..Default::default()
    };
    meta.extra.insert("bits".into(), json!(bits));
    meta.extra.insert("fingerprint".into(), json!(c.fingerprint()));
    meta.extra.insert("quad_degree".into(), json!(quad.quad_degree));
    meta.extra.insert("phase_rule".into(), json!(rule_name(quad.phase_rule)));
    meta.extra.insert("annealing".into(), sa_meta(sa));
    meta
}

fn optimize(a: &OptimizeArgs, out: &mut dyn Write) -> CliResult<()> {
    let params = a.channel.params()?;
    let grid = a.quad.grid()?;
    let config = a.sa.config(a.seed)?;
    if a.m_points < 2 || !a.m_points.is_power_of_two() {
        return Err(CliError::Invalid(format!("--m-points must be a power of two >= 2, got {}", a.m_points)));
    }
    let initial = match &a.init {
        Some(path) => Some(read_constellation(path)?.0),
        None => None,
    };
    let pool = thread_pool(None)?;
    let objective = a.objective.into();
    let (best, trace) = parallel::optimize(&pool, a.m_points, &params, objective, &grid, a.quad.phase_rule.into(), &config, initial)?;
    let mut meta = design_meta(objective, a.channel.snr_db, a.channel.pnsd_deg, a.seed, trace.best_bits, &best, &a.quad, &config);
    meta.extra.insert("m_points".into(), json!(a.m_points));
    if let Some(init) = &a.init {
        meta.extra.insert("init".into(), json!(init.display().to_string()));
    }
    write_constellation(&a.output, &best, &meta)?;
    if let Some(path) = &a.trace {
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace)?;
        write_text(path, &String::from_utf8(buf).expect("utf-8"))?;
    }
    emit(out, &format!("{} {:.6} bits -> {}\n", objective.as_str(), trace.best_bits, a.output.display()))
}

fn validate(a: &ValidateArgs, out: &mut dyn Write) -> CliResult<()> {
    let (c, _) = read_constellation(&a.file)?;
    let c = unit_power(c, &a.file)?;
    let params = a.channel.params()?;
    let objective = a.objective.into();
    let evaluator = a.quad.evaluator()?;
    let mc = parallel::monte_carlo(&evaluator.pool, &c, &params, a.samples, a.seed, objective, LikelihoodRoute::Bessel)?;
    let q = evaluator.evaluate(&c, &params, objective)?;
    let tolerance = VALIDATION_TOLERANCE.max(3.0 * mc.stderr);
    let difference = q.raw_bits - mc.raw_bits;
    let pass = difference.abs() <= tolerance;
    let report = json!({
        "objective": objective.as_str(),
        "snr_db": a.channel.snr_db,
        "pnsd_deg": a.channel.pnsd_deg,
        "quadrature_bits": q.raw_bits,
        "monte_carlo_bits": mc.raw_bits,
        "monte_carlo_stderr": mc.stderr,
        "samples": a.samples,
        "seed": a.seed,
        "difference": difference,
        "tolerance": tolerance,
        "pass": pass,
    });
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")))?;
    if pass {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

/// `from, from + step, ...` up to `to` inclusive (within a small slack).
pub fn arithmetic_grid(from: f64, to: f64, step: f64) -> CliResult<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !from.is_finite() || !to.is_finite() || to < from {
        return Err(CliError::Invalid("sweep needs finite --from <= --to and --step > 0".into()));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(CliError::Invalid(format!("sweep of {n} points is too long")));
    }
    Ok((0..n).map(|i| from + i as f64 * step).collect())
}

fn sweep(a: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let (c, _) = read_constellation(&a.file)?;
    let c = unit_power(c, &a.file)?;
    let list = arithmetic_grid(a.from, a.to, a.step)?;
    let (abscissa, fixed) = match a.axis {
        Axis::Snr => (Abscissa::SnrDb, a.pnsd_deg),
        Axis::Pnsd => (
            Abscissa::PnsdDeg,
            a.snr_db.ok_or_else(|| CliError::Invalid("a PNSD sweep needs --snr-db".into()))?,
        ),
    };
    let curve = sweep_with(&a.quad.evaluator()?, &c, abscissa, fixed, &list, a.objective.into())?;
    let mut buf = Vec::new();
    write_curve(&mut buf, &curve)?;
    emit_or_write(out, a.output.as_deref(), &String::from_utf8(buf).expect("utf-8"))
}

fn campaign(a: &CampaignArgs, out: &mut dyn Write) -> CliResult<()> {
    let grid = a.quad.grid()?;
    let config = a.sa.config(a.seed)?;
    if a.m_points < 2 || !a.m_points.is_power_of_two() {
        return Err(CliError::Invalid(format!("--m-points must be a power of two >= 2, got {}", a.m_points)));
    }
    if a.quad.phase_rule != PhaseRuleArg::Tikhonov {
        return Err(CliError::Invalid("campaigns use the tikhonov phase rule".into()));
    }
    let pool = thread_pool(None)?;
    let objective: Objective = a.objective.into();
    let designs = parallel::campaign(&pool, a.m_points, &a.snr_list, &a.pnsd_list, objective, &config, &grid, a.chain)?;
    let mut rows = Vec::with_capacity(designs.len());
    for (&(i, j), d) in &designs {
        let file = format!("cell_{i}_{j}.json");
        let cfg = SaConfig { seed: d.seed, ..config.clone() };
        let mut meta = design_meta(objective, d.snr_db, d.pnsd_deg, d.seed, d.bits, &d.constellation, &a.quad, &cfg);
        meta.extra.insert("m_points".into(), json!(a.m_points));
        meta.extra.insert("base_seed".into(), json!(a.seed));
        meta.extra.insert("cell".into(), json!([i, j]));
        meta.extra.insert("chain".into(), json!(a.chain));
        write_constellation(&a.out_dir.join(&file), &d.constellation, &meta)?;
        rows.push(ManifestRow { snr_index: i, pnsd_index: j, snr_db: d.snr_db, pnsd_deg: d.pnsd_deg, seed: d.seed, bits: d.bits, file });
    }
    let mut buf = Vec::new();
    write_manifest(&mut buf, &rows)?;
    let manifest = a.out_dir.join("manifest.csv");
    write_text(&manifest, &String::from_utf8(buf).expect("utf-8"))?;
    emit(out, &format!("{} designs -> {}\n", rows.len(), manifest.display()))
}

/// Expands directories into their `*.json` files, sorted by name.
fn design_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn mismatch(a: &MismatchArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut designs = Campaign::new();
    for (index, path) in design_files(&a.designs)?.iter().enumerate() {
        let (c, meta) = read_constellation(path)?;
        let c = unit_power(c, path)?;
        let (Some(snr_db), Some(pnsd_deg)) = (meta.snr_db, meta.pnsd_deg) else {
            return Err(CliError::format_in(path, "meta lacks snr_db or pnsd_deg"));
        };
        let design = Design {
            snr_db,
            pnsd_deg,
            objective: meta.objective.unwrap_or_default(),
            seed: meta.seed.unwrap_or_default(),
            bits: f64::NAN,
            constellation: c,
        };
        designs.insert((index, 0), design);
    }
    let report = mismatch_matrix_with(&a.quad.evaluator()?, &designs, &a.eval_snr_list, &a.eval_pnsd_list, a.objective.into())?;
    let mut buf = Vec::new();
    write_mismatch(&mut buf, &report)?;
    emit_or_write(out, a.output.as_deref(), &String::from_utf8(buf).expect("utf-8"))
}

/// Parses `points:radius[:phase_deg],...`.
pub fn parse_rings(text: &str) -> CliResult<Vec<Ring>> {
    text.split(',')
        .map(|ring| {
            let fields: Vec<&str> = ring.trim().split(':').collect();
            let bad = || CliError::Invalid(format!("bad ring {ring:?}, expected points:radius[:phase_deg]"));
            let (points, radius, phase) = match fields[..] {
                [n, r] => (n, r, "0"),
                [n, r, p] => (n, r, p),
                _ => return Err(bad()),
            };
            Ok(Ring {
                points: points.parse().map_err(|_| bad())?,
                radius: radius.parse().map_err(|_| bad())?,
                phase: phase.parse::<f64>().map_err(|_| bad())?.to_radians(),
            })
        })
        .collect()
}

fn reference(a: &ReferenceArgs, out: &mut dyn Write) -> CliResult<()> {
    let kind = match a.kind {
        KindArg::Psk => ReferenceKind::Psk,
        KindArg::Qam => ReferenceKind::Qam,
        KindArg::Apsk => ReferenceKind::Apsk,
    };
    let rings = a.rings.as_deref().map(parse_rings).transpose()?;
    let size = match (a.m_points, &rings) {
        (Some(m), _) => m,
        (None, Some(r)) => r.iter().map(|ring| ring.points).sum(),
        (None, None) => return Err(CliError::Invalid("--m-points is required".into())),
    };
    let c = reference_constellation(kind, size, rings.as_deref())?;
    let mut meta = Meta::default();
    meta.extra.insert("reference".into(), json!(format!("{:?}", a.kind).to_lowercase()));
    meta.extra.insert("fingerprint".into(), json!(c.fingerprint()));
    if let Some(r) = &a.rings {
        meta.extra.insert("rings".into(), json!(r));
    }
    emit_or_write(out, a.output.as_deref(), &crate::format::constellation_to_json(&c, &meta))
}

fn gap(a: &GapArgs, out: &mut dyn Write) -> CliResult<()> {
    let (c_ami, _) = read_constellation(&a.ami)?;
    let (c_pami, _) = read_constellation(&a.pami)?;
    let c_ami = unit_power(c_ami, &a.ami)?;
    let c_pami = unit_power(c_pami, &a.pami)?;
    ChannelParams::from_snr_pnsd(0.0, a.pnsd_deg)?;
    let r = snr_gap(&a.quad.evaluator()?, (&c_ami, Objective::Ami), (&c_pami, Objective::Pami), a.pnsd_deg, a.target_bits)?;
    let report = json!({
        "pnsd_deg": a.pnsd_deg,
        "target_bits": a.target_bits,
        "ami_snr_db": r.snr_a_db,
        "pami_snr_db": r.snr_b_db,
        "gap_db": r.gap_db,
    });
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn grids() {
        assert_eq!(arithmetic_grid(1.0, 15.0, 1.0).unwrap().len(), 15);
        assert_eq!(arithmetic_grid(0.0, 0.3, 0.1).unwrap().len(), 4);
        assert_eq!(arithmetic_grid(2.0, 2.0, 1.0).unwrap(), vec![2.0]);
        assert!(arithmetic_grid(3.0, 1.0, 1.0).is_err());
        assert!(arithmetic_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn rings() {
        let r = parse_rings("4:0.5,12:1.2:15").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].points, 12);
        assert!((r[1].phase - 15f64.to_radians()).abs() < 1e-15);
        assert!(parse_rings("4").is_err());
        assert!(parse_rings("a:1").is_err());
    }
}
