//! Achievable mutual information (AMI) and pragmatic, bit-wise mutual
//! information (PAMI) of a constellation.
//!
//! Both quantities are written as `m - E[penalty] / ln 2`, where the penalty
//! for a received sample `y` of sent point `x` is
//!
//! * AMI: `ln sum_u exp(L(u))`,
//! * PAMI: `sum_i [ln sum_u exp(L(u)) - ln sum_{u: bit_i(u) = bit_i(x)} exp(L(u))]`,
//!
//! with `L(u) = log(p(y|u) / p(y|x))`. The quadrature evaluator uses the
//! peak-phase metric for `L` and Gauss-Hermite nodes for the expectation;
//! the Monte Carlo estimator uses the exact likelihood and random draws.
//!
//! Work is split into one block per transmitted point. Blocks are summed
//! with compensated summation and then combined in index order, so any
//! schedule that evaluates the blocks independently reproduces the serial
//! result bit for bit.

mod monte_carlo;

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::likelihood::peak_metric;
use crate::model::{ChannelParams, Constellation};
use crate::quadrature::{NoiseGrid, PhaseRule, QuadratureGrid};
use crate::special::{log_sum_exp_slice, CompensatedSum};
use crate::{Error, Result};

pub use monte_carlo::{
    ami_monte_carlo, monte_carlo, pami_monte_carlo, sample_complex_gaussian, sample_tikhonov, LikelihoodRoute,
    MonteCarloEstimator, MIN_SAMPLES,
};

/// Slack allowed above `m` before a result is flagged as out of range.
pub const RANGE_SLACK: f64 = 0.01;

/// Which information measure to evaluate or optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Objective {
    #[default]
    Ami,
    Pami,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Ami => "AMI",
            Objective::Pami => "PAMI",
        }
    }
}

impl core::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("ami") {
            Ok(Objective::Ami)
        } else if s.eq_ignore_ascii_case("pami") {
            Ok(Objective::Pami)
        } else {
            Err(Error::InvalidConfig("objective must be AMI or PAMI"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// Bits per symbol with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Estimate clamped to `[0, m]`.
    pub bits: f64,
    /// Estimate before clamping.
    pub raw_bits: f64,
    /// Set when `raw_bits` left `[0, m + RANGE_SLACK]`.
    pub out_of_range: bool,
    pub objective: Objective,
    pub method: Method,
    /// Standard error of the estimate; zero for quadrature.
    pub stderr: f64,
    pub params: ChannelParams,
    pub fingerprint: String,
}

impl CapacityResult {
    pub(crate) fn new(
        raw_bits: f64,
        stderr: f64,
        objective: Objective,
        method: Method,
        params: ChannelParams,
        c: &Constellation,
    ) -> Self {
        let m = c.bits_per_symbol() as f64;
        let out_of_range = !(raw_bits >= 0.0 && raw_bits <= m + RANGE_SLACK);
        if out_of_range {
            log::warn!("{} estimate {raw_bits} outside [0, {m}]", objective.as_str());
        }
        Self {
            bits: raw_bits.clamp(0.0, m),
            raw_bits,
            out_of_range,
            objective,
            method,
            stderr,
            params,
            fingerprint: c.fingerprint(),
        }
    }
}

/// Indices of the points whose label has bit `bit` equal to `value`.
#[derive(Debug, Clone)]
pub(crate) struct BitPartition {
    sets: Vec<[Vec<usize>; 2]>,
}

impl BitPartition {
    pub(crate) fn new(c: &Constellation) -> Self {
        let sets = (0..c.bits_per_symbol())
            .map(|bit| {
                let mut zero = Vec::new();
                let mut one = Vec::new();
                for i in 0..c.len() {
                    if c.label_bit(i, bit) {
                        one.push(i);
                    } else {
                        zero.push(i);
                    }
                }
                [zero, one]
            })
            .collect();
        Self { sets }
    }

    /// Points sharing bit `bit` with point `x`.
    #[inline]
    pub(crate) fn matching(&self, c: &Constellation, x: usize, bit: u32) -> &[usize] {
        &self.sets[bit as usize][c.label_bit(x, bit) as usize]
    }

    /// Penalty for one received sample given the log-ratios `ratios[u]`.
    pub(crate) fn penalty(
        &self,
        objective: Objective,
        c: &Constellation,
        x: usize,
        ratios: &[f64],
        scratch: &mut Vec<f64>,
    ) -> f64 {
        let all = log_sum_exp_slice(ratios);
        match objective {
            Objective::Ami => all,
            Objective::Pami => {
                let mut total = 0.0;
                for bit in 0..c.bits_per_symbol() {
                    scratch.clear();
                    scratch.extend(self.matching(c, x, bit).iter().map(|&u| ratios[u]));
                    total += all - log_sum_exp_slice(scratch);
                }
                total
            }
        }
    }
}

/// Noise grid for one channel, reusable across constellations.
#[derive(Debug, Clone)]
pub struct QuadratureKernel {
    params: ChannelParams,
    grid: NoiseGrid,
}

impl QuadratureKernel {
    pub fn new(params: ChannelParams, grid: &QuadratureGrid, phase_rule: PhaseRule) -> Self {
        Self { params, grid: grid.noise_grid(&params, phase_rule) }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn noise_grid(&self) -> &NoiseGrid {
        &self.grid
    }

    /// Binds a unit-power constellation to the kernel.
    ///
    /// The tensor-product grid is not isotropic, so the constellation is
    /// first turned to a canonical orientation (see [`canonical_rotation`]);
    /// this makes the result independent of a global rotation.
    pub fn prepare<'a>(&'a self, c: &'a Constellation) -> Result<QuadratureEvaluator<'a>> {
        if !c.is_unit_power() {
            return Err(Error::NotNormalized(c.average_power()));
        }
        Ok(QuadratureEvaluator {
            source: c,
            canonical: c.rotated(canonical_rotation(c)),
            kernel: self,
            partition: BitPartition::new(c),
        })
    }
}

/// Rotation that puts the point of largest magnitude (lowest index among
/// ties) on the positive real axis.
pub fn canonical_rotation(c: &Constellation) -> f64 {
    let energies: Vec<f64> = c.points().iter().map(|p| p.norm_sqr()).collect();
    let max = energies.iter().copied().fold(0.0, f64::max);
    let anchor = energies.iter().position(|&e| e >= max * (1.0 - 1e-12)).unwrap_or(0);
    -c.points()[anchor].arg()
}

/// Quadrature evaluator for one constellation and channel.
#[derive(Debug, Clone)]
pub struct QuadratureEvaluator<'a> {
    source: &'a Constellation,
    canonical: Constellation,
    kernel: &'a QuadratureKernel,
    partition: BitPartition,
}

impl QuadratureEvaluator<'_> {
    /// Number of independent work blocks (one per transmitted point).
    pub fn block_count(&self) -> usize {
        self.canonical.len()
    }

    /// Weighted penalty summed over the noise grid for transmitted point `x`.
    pub fn block(&self, objective: Objective, x: usize) -> f64 {
        let c = &self.canonical;
        let params = &self.kernel.params;
        let points = c.points();
        let sent = points[x];
        let mut metrics = alloc::vec![0.0; c.len()];
        let mut scratch = Vec::with_capacity(c.len());
        let mut acc = CompensatedSum::new();
        for node in self.kernel.grid.nodes() {
            let y = sent * node.rotor + node.noise;
            fill_metrics(y, points, params, &mut metrics);
            let reference = metrics[x];
            for v in metrics.iter_mut() {
                *v -= reference;
            }
            metrics[x] = 0.0;
            let penalty = self.partition.penalty(objective, c, x, &metrics, &mut scratch);
            acc.add(node.weight * penalty);
        }
        acc.value()
    }

    /// Combines block sums (in block order) into a result.
    pub fn finish(&self, objective: Objective, blocks: &[f64]) -> CapacityResult {
        let c = self.source;
        let total: f64 = blocks.iter().copied().collect::<CompensatedSum>().value();
        let mean_penalty = total / (c.len() as f64 * libm::pow(PI, 1.5));
        let raw = c.bits_per_symbol() as f64 - mean_penalty / LN_2;
        CapacityResult::new(raw, 0.0, objective, Method::Quadrature, self.kernel.params, c)
    }

    /// Serial evaluation.
    pub fn evaluate(&self, objective: Objective) -> CapacityResult {
        let blocks: Vec<f64> = (0..self.block_count()).map(|x| self.block(objective, x)).collect();
        self.finish(objective, &blocks)
    }
}

#[inline]
fn fill_metrics(y: Complex64, points: &[Complex64], params: &ChannelParams, out: &mut [f64]) {
    for (slot, &u) in out.iter_mut().zip(points) {
        *slot = peak_metric(y, u, params);
    }
}

/// AMI by Gauss-Hermite quadrature with the default phase rule.
pub fn ami_quadrature(c: &Constellation, params: &ChannelParams, grid: &QuadratureGrid) -> Result<CapacityResult> {
    quadrature(c, params, grid, Objective::Ami, PhaseRule::default())
}

/// PAMI by Gauss-Hermite quadrature with the default phase rule.
pub fn pami_quadrature(c: &Constellation, params: &ChannelParams, grid: &QuadratureGrid) -> Result<CapacityResult> {
    quadrature(c, params, grid, Objective::Pami, PhaseRule::default())
}

/// Quadrature evaluation with an explicit objective and phase rule.
pub fn quadrature(
    c: &Constellation,
    params: &ChannelParams,
    grid: &QuadratureGrid,
    objective: Objective,
    phase_rule: PhaseRule,
) -> Result<CapacityResult> {
    Ok(QuadratureKernel::new(*params, grid, phase_rule).prepare(c)?.evaluate(objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_constellation, ReferenceKind};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn psk8() -> Constellation {
        reference_constellation(ReferenceKind::Psk, 8, None).unwrap()
    }

    fn params(snr: f64, pn: f64) -> ChannelParams {
        ChannelParams::from_snr_pnsd(snr, pn).unwrap()
    }

    fn random_constellation(rng: &mut ChaCha8Rng, size: usize) -> Constellation {
        let points = (0..size)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut labels: Vec<u32> = (0..size as u32).collect();
        for i in (1..size).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        Constellation::new(points, labels).unwrap().normalized().unwrap()
    }

    #[test]
    fn saturates_and_vanishes_at_extremes() {
        let grid = QuadratureGrid::default();
        let c = psk8();
        let high = ami_quadrature(&c, &params(40.0, 0.0), &grid).unwrap();
        assert!((high.bits - 3.0).abs() < 1e-3, "{}", high.bits);
        let high_pami = pami_quadrature(&c, &params(40.0, 0.0), &grid).unwrap();
        assert!((high_pami.bits - 3.0).abs() < 1e-3);
        for pn in [0.0, 5.0, 25.0] {
            let low = ami_quadrature(&c, &params(-40.0, pn), &grid).unwrap();
            assert!(low.bits.abs() < 1e-2, "{}", low.bits);
        }
    }

    #[test]
    fn rejects_unnormalized_input() {
        let c = psk8().scaled(2.0);
        let err = ami_quadrature(&c, &params(10.0, 5.0), &QuadratureGrid::default()).unwrap_err();
        assert!(matches!(err, Error::NotNormalized(_)));
    }

    #[test]
    fn gray_labels_beat_natural_labels() {
        let grid = QuadratureGrid::default();
        let gray = psk8();
        let natural = Constellation::with_natural_labels(gray.points().to_vec()).unwrap();
        let p = params(12.0, 0.0);
        let g = pami_quadrature(&gray, &p, &grid).unwrap().bits;
        let n = pami_quadrature(&natural, &p, &grid).unwrap().bits;
        assert!(g > n, "gray {g} natural {n}");
        // AMI ignores labels
        assert_eq!(
            ami_quadrature(&gray, &p, &grid).unwrap().bits,
            ami_quadrature(&natural, &p, &grid).unwrap().bits
        );
    }

    #[test]
    fn pami_never_exceeds_ami() {
        let grid = QuadratureGrid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let c = random_constellation(&mut rng, 8);
            let p = params(rng.random_range(0.0..20.0), rng.random_range(0.0..30.0));
            let ami = ami_quadrature(&c, &p, &grid).unwrap().bits;
            let pami = pami_quadrature(&c, &p, &grid).unwrap().bits;
            assert!(pami <= ami + 1e-6, "{pami} > {ami}");
        }
    }

    #[test]
    fn rotation_invariance() {
        let grid = QuadratureGrid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_constellation(&mut rng, 8);
        for pn in [0.0, 10.0] {
            let p = params(9.0, pn);
            let base = ami_quadrature(&c, &p, &grid).unwrap().bits;
            for theta in [0.3, 1.7, -2.9] {
                let rotated = ami_quadrature(&c.rotated(theta), &p, &grid).unwrap().bits;
                assert!((rotated - base).abs() < 1e-6, "{rotated} vs {base}");
            }
        }
    }

    #[test]
    fn monotone_in_snr_and_pnsd() {
        let grid = QuadratureGrid::default();
        let c = psk8();
        let mut last = 0.0;
        for snr in (-5..=25).map(|s| s as f64) {
            let v = ami_quadrature(&c, &params(snr, 10.0), &grid).unwrap().bits;
            assert!(v >= last - 0.005, "snr {snr}: {v} < {last}");
            last = v;
        }
        let mut last = f64::INFINITY;
        for pn in [0.0, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
            let v = ami_quadrature(&c, &params(12.0, pn), &grid).unwrap().bits;
            assert!(v <= last + 0.005, "pnsd {pn}: {v} > {last}");
            last = v;
        }
    }

    #[test]
    fn awgn_path_matches_vanishing_phase_noise() {
        let grid = QuadratureGrid::default();
        let c = psk8();
        for snr in [3.0, 9.0, 15.0] {
            let k_n = 2.0 * 10f64.powf(snr / 10.0);
            let weak = ChannelParams::from_concentrations(k_n, 1e8).unwrap();
            let none = ChannelParams::from_concentrations(k_n, f64::INFINITY).unwrap();
            let a = ami_quadrature(&c, &weak, &grid).unwrap().bits;
            let b = ami_quadrature(&c, &none, &grid).unwrap().bits;
            assert!((a - b).abs() < 0.005, "{a} vs {b}");
        }
    }

    #[test]
    fn block_schedule_does_not_change_result() {
        let grid = QuadratureGrid::default();
        let c = psk8();
        let p = params(9.0, 5.0);
        let kernel = QuadratureKernel::new(p, &grid, PhaseRule::Tikhonov);
        let ev = kernel.prepare(&c).unwrap();
        let serial = ev.evaluate(Objective::Pami);
        // evaluate blocks in reverse, then combine in index order
        let mut blocks = vec![0.0; ev.block_count()];
        for x in (0..ev.block_count()).rev() {
            blocks[x] = ev.block(Objective::Pami, x);
        }
        assert_eq!(ev.finish(Objective::Pami, &blocks), serial);
    }

    #[test]
    fn clamps_and_flags() {
        let c = psk8();
        let r = CapacityResult::new(3.02, 0.0, Objective::Ami, Method::Quadrature, params(1.0, 0.0), &c);
        assert_eq!(r.bits, 3.0);
        assert!(r.out_of_range);
        let r = CapacityResult::new(3.005, 0.0, Objective::Ami, Method::Quadrature, params(1.0, 0.0), &c);
        assert_eq!(r.bits, 3.0);
        assert!(!r.out_of_range);
        let r = CapacityResult::new(-0.1, 0.0, Objective::Ami, Method::Quadrature, params(1.0, 0.0), &c);
        assert_eq!(r.bits, 0.0);
        assert!(r.out_of_range);
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("ami".parse::<Objective>(), Ok(Objective::Ami));
        assert_eq!("PAMI".parse::<Objective>(), Ok(Objective::Pami));
        assert!("x".parse::<Objective>().is_err());
    }
}
