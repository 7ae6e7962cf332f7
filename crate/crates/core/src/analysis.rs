//! Batch experiments: SNR and PNSD sweeps, design campaigns over a
//! parameter grid, mismatch matrices and the pragmatic SNR gap.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::annealer::{sa_optimize_from, SaConfig};
use crate::capacity::{CapacityResult, Objective, QuadratureKernel};
use crate::model::{ChannelParams, Constellation};
use crate::quadrature::{PhaseRule, QuadratureGrid};
use crate::{Error, Result};

/// Bisection range for [`snr_for_rate`], in dB.
pub const SNR_BRACKET_DB: (f64, f64) = (-10.0, 40.0);
/// Bisection stops once the bracket is narrower than this (dB).
pub const BISECTION_TOLERANCE_DB: f64 = 0.01;
pub const BISECTION_MAX_ITERATIONS: usize = 60;
/// Losses below this are treated as quadrature noise, not a real gain.
pub const MISMATCH_LOSS_TOLERANCE: f64 = 0.005;

/// Anything that turns a constellation and a channel into a capacity
/// figure.
pub trait CapacityEvaluator {
    fn evaluate(&self, c: &Constellation, params: &ChannelParams, objective: Objective) -> Result<CapacityResult>;
}

/// Serial quadrature evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub grid: QuadratureGrid,
    pub rule: PhaseRule,
}

impl Quadrature {
    pub fn new(grid: QuadratureGrid) -> Self {
        Self { grid, rule: PhaseRule::default() }
    }
}

impl CapacityEvaluator for Quadrature {
    fn evaluate(&self, c: &Constellation, params: &ChannelParams, objective: Objective) -> Result<CapacityResult> {
        Ok(QuadratureKernel::new(*params, &self.grid, self.rule).prepare(c)?.evaluate(objective))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    SnrDb,
    PnsdDeg,
}

impl Abscissa {
    pub fn as_str(self) -> &'static str {
        match self {
            Abscissa::SnrDb => "snr_db",
            Abscissa::PnsdDeg => "pnsd_deg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub bits: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCurve {
    pub abscissa: Abscissa,
    /// The parameter held fixed: PNSD in degrees for an SNR sweep, SNR in
    /// dB for a PNSD sweep.
    pub fixed: f64,
    pub objective: Objective,
    pub fingerprint: String,
    pub points: Vec<CurvePoint>,
}

fn check_ascending(list: &[f64], what: &'static str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::Empty(what));
    }
    if list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NotSorted);
    }
    Ok(())
}

/// Evaluates `c` along a strictly increasing list of SNRs or PNSDs.
pub fn sweep_with<E: CapacityEvaluator + ?Sized>(
    evaluator: &E,
    c: &Constellation,
    abscissa: Abscissa,
    fixed: f64,
    list: &[f64],
    objective: Objective,
) -> Result<CapacityCurve> {
    check_ascending(list, "sweep list")?;
    let points = list
        .iter()
        .map(|&x| {
            let params = match abscissa {
                Abscissa::SnrDb => ChannelParams::from_snr_pnsd(x, fixed)?,
                Abscissa::PnsdDeg => ChannelParams::from_snr_pnsd(fixed, x)?,
            };
            let r = evaluator.evaluate(c, &params, objective)?;
            Ok(CurvePoint { x, bits: r.bits, stderr: r.stderr })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapacityCurve { abscissa, fixed, objective, fingerprint: c.fingerprint(), points })
}

pub fn snr_sweep(
    c: &Constellation,
    pnsd_deg: f64,
    snr_list: &[f64],
    objective: Objective,
    grid: &QuadratureGrid,
) -> Result<CapacityCurve> {
    sweep_with(&Quadrature::new(grid.clone()), c, Abscissa::SnrDb, pnsd_deg, snr_list, objective)
}

pub fn pnsd_sweep(
    c: &Constellation,
    snr_db: f64,
    pnsd_list_deg: &[f64],
    objective: Objective,
    grid: &QuadratureGrid,
) -> Result<CapacityCurve> {
    sweep_with(&Quadrature::new(grid.clone()), c, Abscissa::PnsdDeg, snr_db, pnsd_list_deg, objective)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of campaign cell `(snr index, pnsd index)`.
pub fn cell_seed(base_seed: u64, snr_index: usize, pnsd_index: usize) -> u64 {
    base_seed ^ mix64(((snr_index as u64) << 32) | pnsd_index as u64)
}

/// One optimized constellation and the channel it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub snr_db: f64,
    pub pnsd_deg: f64,
    pub objective: Objective,
    pub seed: u64,
    pub bits: f64,
    pub constellation: Constellation,
}

/// Designs keyed by `(snr index, pnsd index)`.
pub type Campaign = BTreeMap<(usize, usize), Design>;

/// Runs one annealing per grid cell.
///
/// Every cell uses [`cell_seed`] of `config.seed`. With `chain` set, cells
/// are visited in key order and each starts from the previous design
/// (useful for large constellations); otherwise cells are independent.
pub fn design_campaign(
    size: usize,
    snr_list: &[f64],
    pnsd_list: &[f64],
    objective: Objective,
    config: &SaConfig,
    grid: &QuadratureGrid,
    chain: bool,
) -> Result<Campaign> {
    let cells = campaign_cells(snr_list, pnsd_list)?;
    let mut out = Campaign::new();
    let mut previous: Option<Constellation> = None;
    for (key, snr_db, pnsd_deg) in cells {
        let start = if chain { previous.clone() } else { None };
        let design = design_cell(size, snr_db, pnsd_deg, key, objective, config, grid, start)?;
        previous = Some(design.constellation.clone());
        out.insert(key, design);
    }
    Ok(out)
}

/// Grid index and (SNR dB, PNSD deg) of one campaign cell.
pub type Cell = ((usize, usize), f64, f64);

/// Grid cells of a campaign in key order.
pub fn campaign_cells(snr_list: &[f64], pnsd_list: &[f64]) -> Result<Vec<Cell>> {
    if snr_list.is_empty() {
        return Err(Error::Empty("SNR list"));
    }
    if pnsd_list.is_empty() {
        return Err(Error::Empty("PNSD list"));
    }
    let mut cells = Vec::with_capacity(snr_list.len() * pnsd_list.len());
    for (i, &snr) in snr_list.iter().enumerate() {
        for (j, &pnsd) in pnsd_list.iter().enumerate() {
            ChannelParams::from_snr_pnsd(snr, pnsd)?;
            cells.push(((i, j), snr, pnsd));
        }
    }
    Ok(cells)
}

/// Anneals a single campaign cell.
#[allow(clippy::too_many_arguments)]
pub fn design_cell(
    size: usize,
    snr_db: f64,
    pnsd_deg: f64,
    (i, j): (usize, usize),
    objective: Objective,
    config: &SaConfig,
    grid: &QuadratureGrid,
    initial: Option<Constellation>,
) -> Result<Design> {
    let params = ChannelParams::from_snr_pnsd(snr_db, pnsd_deg)?;
    let seed = cell_seed(config.seed, i, j);
    let cfg = SaConfig { seed, ..config.clone() };
    let (constellation, trace) = sa_optimize_from(size, &params, objective, grid, &cfg, initial)?;
    log::info!("cell ({i}, {j}) snr {snr_db} dB pnsd {pnsd_deg} deg: {:.5} bits", trace.best_bits);
    Ok(Design { snr_db, pnsd_deg, objective, seed, bits: trace.best_bits, constellation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchReport {
    pub objective: Objective,
    /// `(snr_db, pnsd_deg)` of each design, one row each.
    pub designs: Vec<(f64, f64)>,
    /// `(snr_db, pnsd_deg)` of each evaluation cell, one column each.
    pub cells: Vec<(f64, f64)>,
    /// `bits[design][cell]`.
    pub bits: Vec<Vec<f64>>,
    /// `loss[design][cell]`: reference bits minus this design's bits.
    pub loss: Vec<Vec<f64>>,
    /// Row used as reference per column: the design made for that channel
    /// when there is one, otherwise the best design in the column.
    pub reference: Vec<usize>,
    /// Whether the reference of each column is a matched design.
    pub matched: Vec<bool>,
}

impl MismatchReport {
    /// Smallest loss in the matrix.
    pub fn min_loss(&self) -> f64 {
        self.loss.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

fn same_channel(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
}

pub fn mismatch_matrix(
    designs: &Campaign,
    eval_snr_list: &[f64],
    eval_pnsd_list: &[f64],
    objective: Objective,
    grid: &QuadratureGrid,
) -> Result<MismatchReport> {
    mismatch_matrix_with(&Quadrature::new(grid.clone()), designs, eval_snr_list, eval_pnsd_list, objective)
}

/// Evaluates every design on every `(snr, pnsd)` cell.
pub fn mismatch_matrix_with<E: CapacityEvaluator + ?Sized>(
    evaluator: &E,
    designs: &Campaign,
    eval_snr_list: &[f64],
    eval_pnsd_list: &[f64],
    objective: Objective,
) -> Result<MismatchReport> {
    if designs.is_empty() {
        return Err(Error::Empty("designs"));
    }
    let cells: Vec<(f64, f64)> = campaign_cells(eval_snr_list, eval_pnsd_list)?
        .into_iter()
        .map(|(_, s, p)| (s, p))
        .collect();
    let rows: Vec<&Design> = designs.values().collect();
    let mut bits = Vec::with_capacity(rows.len());
    for d in &rows {
        let row = cells
            .iter()
            .map(|&(s, p)| Ok(evaluator.evaluate(&d.constellation, &ChannelParams::from_snr_pnsd(s, p)?, objective)?.bits))
            .collect::<Result<Vec<f64>>>()?;
        bits.push(row);
    }
    let mut reference = Vec::with_capacity(cells.len());
    let mut matched = Vec::with_capacity(cells.len());
    for (col, &cell) in cells.iter().enumerate() {
        match rows.iter().position(|d| same_channel((d.snr_db, d.pnsd_deg), cell)) {
            Some(r) => {
                reference.push(r);
                matched.push(true);
            }
            None => {
                let best = (0..rows.len()).fold(0, |b, r| if bits[r][col] > bits[b][col] { r } else { b });
                reference.push(best);
                matched.push(false);
            }
        }
    }
    let loss = bits
        .iter()
        .map(|row| row.iter().enumerate().map(|(col, &b)| bits[reference[col]][col] - b).collect())
        .collect();
    Ok(MismatchReport {
        objective,
        designs: rows.iter().map(|d| (d.snr_db, d.pnsd_deg)).collect(),
        cells,
        bits,
        loss,
        reference,
        matched,
    })
}

/// Smallest SNR (dB) at which `c` reaches `target_bits` under `objective`,
/// by bisection over [`SNR_BRACKET_DB`].
pub fn snr_for_rate<E: CapacityEvaluator + ?Sized>(
    evaluator: &E,
    c: &Constellation,
    pnsd_deg: f64,
    objective: Objective,
    target_bits: f64,
) -> Result<f64> {
    if !(target_bits > 0.0) || !(target_bits < c.bits_per_symbol() as f64) {
        return Err(Error::TargetUnreachable(target_bits));
    }
    let rate = |snr: f64| -> Result<f64> {
        Ok(evaluator.evaluate(c, &ChannelParams::from_snr_pnsd(snr, pnsd_deg)?, objective)?.raw_bits)
    };
    let (mut lo, mut hi) = SNR_BRACKET_DB;
    if rate(lo)? >= target_bits || rate(hi)? < target_bits {
        return Err(Error::TargetUnreachable(target_bits));
    }
    for _ in 0..BISECTION_MAX_ITERATIONS {
        if hi - lo < BISECTION_TOLERANCE_DB {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rate(mid)? >= target_bits {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// SNR where the first curve reaches the target.
    pub snr_a_db: f64,
    /// SNR where the second curve reaches the target.
    pub snr_b_db: f64,
    /// `snr_b_db - snr_a_db`.
    pub gap_db: f64,
}

/// Horizontal distance between two rate curves at `target_bits`.
pub fn snr_gap<E: CapacityEvaluator + ?Sized>(
    evaluator: &E,
    a: (&Constellation, Objective),
    b: (&Constellation, Objective),
    pnsd_deg: f64,
    target_bits: f64,
) -> Result<GapReport> {
    let snr_a_db = snr_for_rate(evaluator, a.0, pnsd_deg, a.1, target_bits)?;
    let snr_b_db = snr_for_rate(evaluator, b.0, pnsd_deg, b.1, target_bits)?;
    Ok(GapReport { snr_a_db, snr_b_db, gap_db: snr_b_db - snr_a_db })
}

/// Extra SNR the PAMI curve of `c_pami` needs over the AMI curve of
/// `c_ami` to reach `target_bits`. Only the phase noise of `params` is
/// used.
pub fn pragmatic_gap(
    c_ami: &Constellation,
    c_pami: &Constellation,
    params: &ChannelParams,
    grid: &QuadratureGrid,
    target_bits: f64,
) -> Result<GapReport> {
    snr_gap(
        &Quadrature::new(grid.clone()),
        (c_ami, Objective::Ami),
        (c_pami, Objective::Pami),
        params.pnsd_deg(),
        target_bits,
    )
}
