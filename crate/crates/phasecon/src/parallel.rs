//! Thread-parallel evaluators.
//!
//! Work is split into the same per-symbol blocks (quadrature) and sample
//! chunks (Monte Carlo) as the serial code and combined in index order, so
//! results are bit-identical to the serial evaluators for any thread count.

use std::sync::Arc;

use phasecon_core::analysis::{campaign_cells, design_campaign, design_cell, Campaign, CapacityEvaluator};
use phasecon_core::annealer::{anneal, AnnealTrace, SaConfig};
use phasecon_core::capacity::{
    CapacityResult, LikelihoodRoute, MonteCarloEstimator, Objective, QuadratureKernel,
};
use phasecon_core::model::{ChannelParams, Constellation};
use phasecon_core::quadrature::{PhaseRule, QuadratureGrid};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{CliError, CliResult};

/// Environment variable overriding the worker count (unset or 0: one per
/// CPU).
pub const THREADS_ENV: &str = "PHASECON_THREADS";

pub fn thread_pool(threads: Option<usize>) -> CliResult<Arc<ThreadPool>> {
    let threads = match threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
            Err(_) => 0,
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Arc::new)
        .map_err(|e| CliError::Invalid(e.to_string()))
}

#[derive(Clone)]
pub struct ParallelQuadrature {
    pub grid: QuadratureGrid,
    pub rule: PhaseRule,
    pub pool: Arc<ThreadPool>,
}

impl ParallelQuadrature {
    pub fn new(grid: QuadratureGrid, rule: PhaseRule, pool: Arc<ThreadPool>) -> Self {
        Self { grid, rule, pool }
    }
}

impl CapacityEvaluator for ParallelQuadrature {
    fn evaluate(
        &self,
        c: &Constellation,
        params: &ChannelParams,
        objective: Objective,
    ) -> phasecon_core::Result<CapacityResult> {
        let kernel = QuadratureKernel::new(*params, &self.grid, self.rule);
        let ev = kernel.prepare(c)?;
        let blocks: Vec<f64> = self
            .pool
            .install(|| (0..ev.block_count()).into_par_iter().map(|x| ev.block(objective, x)).collect());
        Ok(ev.finish(objective, &blocks))
    }
}

pub fn monte_carlo(
    pool: &ThreadPool,
    c: &Constellation,
    params: &ChannelParams,
    samples: usize,
    seed: u64,
    objective: Objective,
    route: LikelihoodRoute,
) -> phasecon_core::Result<CapacityResult> {
    let est = MonteCarloEstimator::new(c, *params, samples, seed, route)?;
    let chunks: Vec<_> =
        pool.install(|| (0..est.chunk_count()).into_par_iter().map(|i| est.chunk(objective, i)).collect());
    Ok(est.finish(objective, &chunks))
}

/// [`phasecon_core::annealer::sa_optimize_from`] with each candidate
/// evaluated on the pool.
#[allow(clippy::too_many_arguments)]
pub fn optimize(
    pool: &ThreadPool,
    size: usize,
    params: &ChannelParams,
    objective: Objective,
    grid: &QuadratureGrid,
    rule: PhaseRule,
    config: &SaConfig,
    initial: Option<Constellation>,
) -> phasecon_core::Result<(Constellation, AnnealTrace)> {
    let kernel = QuadratureKernel::new(*params, grid, rule);
    anneal(size, objective, config, initial, |c| {
        let ev = kernel.prepare(c)?;
        let blocks: Vec<f64> =
            pool.install(|| (0..ev.block_count()).into_par_iter().map(|x| ev.block(objective, x)).collect());
        Ok(ev.finish(objective, &blocks).raw_bits)
    })
}

/// Campaign with independent cells annealed concurrently. Chained
/// campaigns are inherently sequential and run on the calling thread.
#[allow(clippy::too_many_arguments)]
pub fn campaign(
    pool: &ThreadPool,
    size: usize,
    snr_list: &[f64],
    pnsd_list: &[f64],
    objective: Objective,
    config: &SaConfig,
    grid: &QuadratureGrid,
    chain: bool,
) -> phasecon_core::Result<Campaign> {
    if chain {
        return design_campaign(size, snr_list, pnsd_list, objective, config, grid, true);
    }
    let cells = campaign_cells(snr_list, pnsd_list)?;
    let designs: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(key, snr, pnsd)| design_cell(size, snr, pnsd, key, objective, config, grid, None).map(|d| (key, d)))
            .collect::<phasecon_core::Result<Vec<_>>>()
    })?;
    Ok(designs.into_iter().collect())
}
