use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BitPartition, CapacityResult, Method, Objective};
use crate::likelihood::{exact_log_likelihood, ExactKernel};
use crate::model::{ChannelParams, Constellation};
use crate::special::CompensatedSum;
use crate::{Error, Result};

/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 1000;

/// Samples per independent random stream.
const CHUNK: usize = 4096;

/// Above this concentration the sampler switches to a Gaussian proposal.
const UNIFORM_PROPOSAL_LIMIT: f64 = 50.0;

/// How `log p(y|u)` is evaluated for each sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LikelihoodRoute {
    /// Closed form through `log I0`.
    #[default]
    Bessel,
    /// Trapezoidal phase integration starting from `n_grid` points.
    Trapezoid { n_grid: usize },
}

/// Draws a phase from the Tikhonov law with concentration `k_phi` by
/// rejection. `k_phi = +inf` returns zero.
pub fn sample_tikhonov<R: Rng + ?Sized>(k_phi: f64, rng: &mut R) -> f64 {
    if !k_phi.is_finite() {
        return 0.0;
    }
    if k_phi <= UNIFORM_PROPOSAL_LIMIT {
        // envelope exp(k): accept with exp(k (cos phi - 1))
        loop {
            let phi = rng.random_range(-PI..PI);
            if rng.random::<f64>() < libm::exp(k_phi * (libm::cos(phi) - 1.0)) {
                return phi;
            }
        }
    }
    // 1 - cos(phi) >= 2 phi^2 / pi^2 on [-pi, pi], so a Gaussian with
    // variance pi^2 / (4 k) dominates exp(k (cos phi - 1)).
    let sd = PI / (2.0 * libm::sqrt(k_phi));
    let widen = 2.0 * k_phi / (PI * PI);
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let phi = sd * z;
        if libm::fabs(phi) > PI {
            continue;
        }
        let log_accept = k_phi * (libm::cos(phi) - 1.0) + widen * phi * phi;
        if rng.random::<f64>() < libm::exp(log_accept) {
            return phi;
        }
    }
}

/// Circular complex Gaussian with standard deviation `sigma` per dimension.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sigma * re, sigma * im)
}

/// Partial sums of one random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkSums {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

/// Monte Carlo estimator of AMI/PAMI with the exact likelihood.
///
/// Samples are drawn in chunks; chunk `i` uses the ChaCha stream `i` of the
/// seed, so the estimate does not depend on how chunks are scheduled.
#[derive(Debug, Clone)]
pub struct MonteCarloEstimator<'a> {
    constellation: &'a Constellation,
    params: ChannelParams,
    kernel: ExactKernel,
    partition: BitPartition,
    samples: usize,
    seed: u64,
    route: LikelihoodRoute,
}

impl<'a> MonteCarloEstimator<'a> {
    pub fn new(
        c: &'a Constellation,
        params: ChannelParams,
        samples: usize,
        seed: u64,
        route: LikelihoodRoute,
    ) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::TooFewSamples { min: MIN_SAMPLES, got: samples });
        }
        if !c.is_unit_power() {
            return Err(Error::NotNormalized(c.average_power()));
        }
        if let LikelihoodRoute::Trapezoid { n_grid } = route {
            if n_grid < 64 || n_grid % 2 != 0 {
                return Err(Error::GridTooSmall(n_grid));
            }
            if !params.has_phase_noise() {
                return Err(Error::InvalidChannel("trapezoidal likelihood needs finite phase concentration"));
            }
        }
        Ok(Self {
            constellation: c,
            params,
            kernel: ExactKernel::new(params),
            partition: BitPartition::new(c),
            samples,
            seed,
            route,
        })
    }

    pub fn chunk_count(&self) -> usize {
        self.samples.div_ceil(CHUNK)
    }

    pub fn chunk(&self, objective: Objective, index: usize) -> ChunkSums {
        let c = self.constellation;
        let points = c.points();
        let m = c.bits_per_symbol() as f64;
        let count = CHUNK.min(self.samples - index * CHUNK);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let sigma = self.params.sigma();
        let mut ratios = alloc::vec![0.0; c.len()];
        let mut scratch = Vec::with_capacity(c.len());
        let mut sum = CompensatedSum::new();
        let mut sum_sq = CompensatedSum::new();
        for _ in 0..count {
            let x = rng.random_range(0..c.len());
            let phi = sample_tikhonov(self.params.k_phi(), &mut rng);
            let noise = sample_complex_gaussian(sigma, &mut rng);
            let y = points[x] * Complex64::from_polar(1.0, phi) + noise;
            for (slot, &u) in ratios.iter_mut().zip(points) {
                *slot = self.log_likelihood(y, u);
            }
            let reference = ratios[x];
            for v in ratios.iter_mut() {
                *v -= reference;
            }
            ratios[x] = 0.0;
            let penalty = self.partition.penalty(objective, c, x, &ratios, &mut scratch);
            let bits = m - penalty / LN_2;
            sum.add(bits);
            sum_sq.add(bits * bits);
        }
        ChunkSums { count, sum: sum.value(), sum_sq: sum_sq.value() }
    }

    fn log_likelihood(&self, y: Complex64, u: Complex64) -> f64 {
        match self.route {
            LikelihoodRoute::Bessel => self.kernel.relative(y, u),
            LikelihoodRoute::Trapezoid { n_grid } => {
                exact_log_likelihood(y, u, &self.params, n_grid).expect("grid validated in constructor")
            }
        }
    }

    /// Combines chunk sums (in chunk order) into a result.
    pub fn finish(&self, objective: Objective, chunks: &[ChunkSums]) -> CapacityResult {
        let n: usize = chunks.iter().map(|c| c.count).sum();
        let nf = n as f64;
        let sum: f64 = chunks.iter().map(|c| c.sum).collect::<CompensatedSum>().value();
        let sum_sq: f64 = chunks.iter().map(|c| c.sum_sq).collect::<CompensatedSum>().value();
        let mean = sum / nf;
        let variance = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        let stderr = libm::sqrt(variance / nf);
        CapacityResult::new(mean, stderr, objective, Method::MonteCarlo, self.params, self.constellation)
    }

    pub fn evaluate(&self, objective: Objective) -> CapacityResult {
        let chunks: Vec<ChunkSums> = (0..self.chunk_count()).map(|i| self.chunk(objective, i)).collect();
        self.finish(objective, &chunks)
    }
}

/// Monte Carlo estimate with an explicit objective and likelihood route.
pub fn monte_carlo(
    c: &Constellation,
    params: &ChannelParams,
    samples: usize,
    seed: u64,
    objective: Objective,
    route: LikelihoodRoute,
) -> Result<CapacityResult> {
    Ok(MonteCarloEstimator::new(c, *params, samples, seed, route)?.evaluate(objective))
}

/// AMI by sampling with the exact likelihood.
pub fn ami_monte_carlo(c: &Constellation, params: &ChannelParams, samples: usize, seed: u64) -> Result<CapacityResult> {
    monte_carlo(c, params, samples, seed, Objective::Ami, LikelihoodRoute::Bessel)
}

/// PAMI by sampling with the exact likelihood.
pub fn pami_monte_carlo(c: &Constellation, params: &ChannelParams, samples: usize, seed: u64) -> Result<CapacityResult> {
    monte_carlo(c, params, samples, seed, Objective::Pami, LikelihoodRoute::Bessel)
}
