//! Simulated annealing over point positions and labels under a unit
//! average-power constraint.
//!
//! Each step either moves one point by a random displacement inside a disc
//! whose radius shrinks over time, or (PAMI only) swaps two labels. Point
//! moves are followed by renormalization, so every visited constellation
//! lies on the constraint set. Moves are accepted with the Metropolis rule
//! under a geometric cooling schedule. The step budget is split into
//! `reanneal_count + 1` equal passes; each pass after the first restarts the
//! schedule from the best constellation found so far.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{Objective, QuadratureKernel};
use crate::model::{ChannelParams, Constellation};
use crate::quadrature::{PhaseRule, QuadratureGrid};
use crate::{Error, Result};

/// Moves that bring two points closer than this are rejected.
pub const COLLISION_DISTANCE: f64 = 1e-9;

/// Annealing schedule and budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SaConfig {
    /// Total step budget over all passes.
    pub iterations: usize,
    /// Temperatures in bits.
    pub t_initial: f64,
    pub t_final: f64,
    /// Maximum displacement at the first and last step of a pass.
    pub d_initial: f64,
    pub d_final: f64,
    /// Probability that a step swaps two labels (PAMI only).
    pub label_swap_prob: f64,
    pub seed: u64,
    /// Extra passes restarted from the best constellation so far.
    pub reanneal_count: usize,
    /// Keep one trace row every this many steps (the last step of each
    /// pass is always kept).
    pub record_every: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            t_initial: 0.05,
            t_final: 1e-5,
            d_initial: 0.5,
            d_final: 0.005,
            label_swap_prob: 0.1,
            seed: 0,
            reanneal_count: 1,
            record_every: 100,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 2 * (self.reanneal_count + 1) {
            return Err(Error::InvalidConfig("at least two iterations per pass"));
        }
        if !(self.t_final > 0.0) || !(self.t_initial >= self.t_final) || !self.t_initial.is_finite() {
            return Err(Error::InvalidConfig("temperatures must satisfy t_initial >= t_final > 0"));
        }
        if !(self.d_final > 0.0) || !(self.d_initial >= self.d_final) || !self.d_initial.is_finite() {
            return Err(Error::InvalidConfig("displacements must satisfy d_initial >= d_final > 0"));
        }
        if !(0.0..=1.0).contains(&self.label_swap_prob) {
            return Err(Error::InvalidConfig("label swap probability must lie in [0, 1]"));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be positive"));
        }
        Ok(())
    }

    /// Steps in one pass; the remainder of the budget is dropped.
    pub fn pass_length(&self) -> usize {
        self.iterations / (self.reanneal_count + 1)
    }
}

/// Geometric interpolation between `start` and `end` over a pass.
fn geometric(step: usize, iterations: usize, start: f64, end: f64) -> f64 {
    if step + 1 >= iterations {
        return end;
    }
    let fraction = step as f64 / (iterations - 1) as f64;
    start * libm::pow(end / start, fraction)
}

/// Maximum displacement length at `step` within a pass.
pub fn displacement_schedule(step: usize, config: &SaConfig) -> f64 {
    geometric(step, config.pass_length(), config.d_initial, config.d_final)
}

/// Temperature at `step` within a pass.
pub fn temperature_schedule(step: usize, config: &SaConfig) -> f64 {
    geometric(step, config.pass_length(), config.t_initial, config.t_final)
}

/// Metropolis rule for a maximization: improvements (and ties) always
/// pass, a loss `delta < 0` passes when `draw < exp(delta / temperature)`.
pub fn metropolis_accept(delta: f64, temperature: f64, draw: f64) -> bool {
    delta >= 0.0 || draw < libm::exp(delta / temperature)
}

/// Moves point `index` by a displacement drawn uniformly from the disc of
/// radius `max_disp` (from two uniforms in `[0, 1)`), then renormalizes.
pub fn perturb_point(c: &Constellation, index: usize, max_disp: f64, draws: (f64, f64)) -> Result<Constellation> {
    if index >= c.len() {
        return Err(Error::IndexOutOfRange { index, len: c.len() });
    }
    let (points, labels) = displaced(c, index, max_disp, draws);
    Constellation::from_parts_unchecked(points, labels).normalized()
}

fn displaced(c: &Constellation, index: usize, max_disp: f64, (u1, u2): (f64, f64)) -> (Vec<Complex64>, Vec<u32>) {
    let radius = max_disp * libm::sqrt(u1);
    let step = Complex64::from_polar(radius, 2.0 * PI * u2);
    let mut points = c.points().to_vec();
    points[index] += step;
    (points, c.labels().to_vec())
}

/// Exchanges the labels of points `i` and `j`.
pub fn swap_labels(c: &Constellation, i: usize, j: usize) -> Result<Constellation> {
    for index in [i, j] {
        if index >= c.len() {
            return Err(Error::IndexOutOfRange { index, len: c.len() });
        }
    }
    let mut labels = c.labels().to_vec();
    labels.swap(i, j);
    Ok(Constellation::from_parts_unchecked(c.points().to_vec(), labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Point,
    Swap,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Point => "point",
            MoveKind::Swap => "swap",
        }
    }
}

/// One recorded annealing step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// Step index counted over all passes.
    pub step: usize,
    pub pass: usize,
    pub temperature: f64,
    pub current_bits: f64,
    pub best_bits: f64,
    pub accepted: bool,
    pub move_kind: MoveKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealTrace {
    pub rows: Vec<TraceRow>,
    pub initial_bits: f64,
    pub best_bits: f64,
    pub best: Constellation,
}

/// Random points in the unit disc, normalized, with a random labeling.
pub fn random_constellation<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Constellation> {
    if size < 2 || !size.is_power_of_two() {
        return Err(Error::SizeNotPowerOfTwo(size));
    }
    let points = (0..size)
        .map(|_| {
            let r = libm::sqrt(rng.random::<f64>());
            Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>())
        })
        .collect();
    let mut labels: Vec<u32> = (0..size as u32).collect();
    labels.shuffle(rng);
    Constellation::new(points, labels)?.normalized()
}

fn collides(points: &[Complex64], index: usize) -> bool {
    let limit = COLLISION_DISTANCE * COLLISION_DISTANCE;
    points
        .iter()
        .enumerate()
        .any(|(k, p)| k != index && (p - points[index]).norm_sqr() < limit)
}

/// Annealing driver with a caller-supplied objective.
///
/// `initial` warm-starts the search; otherwise the start is drawn with
/// [`random_constellation`] from the configured seed. Returns the best
/// constellation visited.
pub fn anneal<F>(
    size: usize,
    objective: Objective,
    config: &SaConfig,
    initial: Option<Constellation>,
    mut evaluate: F,
) -> Result<(Constellation, AnnealTrace)>
where
    F: FnMut(&Constellation) -> Result<f64>,
{
    config.validate()?;
    if size < 2 || !size.is_power_of_two() {
        return Err(Error::SizeNotPowerOfTwo(size));
    }
    let swap_prob = match objective {
        Objective::Pami => {
            if config.label_swap_prob == 0.0 {
                log::warn!("PAMI objective with label_swap_prob = 0: the labeling is never explored");
            }
            config.label_swap_prob
        }
        Objective::Ami => 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = match initial {
        Some(c) if c.len() != size => return Err(Error::SizeNotPowerOfTwo(c.len())),
        Some(c) => c.normalized()?,
        None => random_constellation(size, &mut rng)?,
    };
    let mut current_bits = evaluate(&current)?;
    let initial_bits = current_bits;
    let mut best = current.clone();
    let mut best_bits = current_bits;
    let pass_length = config.pass_length();
    let mut rows = Vec::with_capacity(config.iterations / config.record_every + config.reanneal_count + 2);

    for pass in 0..=config.reanneal_count {
        if pass > 0 {
            current = best.clone();
            current_bits = best_bits;
        }
        for step in 0..pass_length {
            let temperature = temperature_schedule(step, config);
            let swap = swap_prob > 0.0 && rng.random::<f64>() < swap_prob;
            let (candidate, kind) = if swap {
                let i = rng.random_range(0..size);
                let j = (i + rng.random_range(1..size)) % size;
                (Some(swap_labels(&current, i, j)?), MoveKind::Swap)
            } else {
                let index = rng.random_range(0..size);
                let draws = (rng.random::<f64>(), rng.random::<f64>());
                let (points, labels) = displaced(&current, index, displacement_schedule(step, config), draws);
                if collides(&points, index) {
                    (None, MoveKind::Point)
                } else {
                    (Some(Constellation::from_parts_unchecked(points, labels).normalized()?), MoveKind::Point)
                }
            };
            let draw = rng.random::<f64>();
            let mut accepted = false;
            if let Some(candidate) = candidate {
                let bits = evaluate(&candidate)?;
                if metropolis_accept(bits - current_bits, temperature, draw) {
                    accepted = true;
                    current = candidate;
                    current_bits = bits;
                    if current_bits > best_bits {
                        best_bits = current_bits;
                        best = current.clone();
                    }
                }
            }
            if step % config.record_every == 0 || step + 1 == pass_length {
                rows.push(TraceRow {
                    step: pass * pass_length + step,
                    pass,
                    temperature,
                    current_bits,
                    best_bits,
                    accepted,
                    move_kind: kind,
                });
            }
        }
    }
    let trace = AnnealTrace { rows, initial_bits, best_bits, best: best.clone() };
    Ok((best, trace))
}

/// Maximizes AMI or PAMI of a `size`-point constellation on the given
/// channel, evaluating candidates by quadrature.
pub fn sa_optimize(
    size: usize,
    params: &ChannelParams,
    objective: Objective,
    grid: &QuadratureGrid,
    config: &SaConfig,
) -> Result<(Constellation, AnnealTrace)> {
    sa_optimize_from(size, params, objective, grid, config, None)
}

/// [`sa_optimize`] with an optional warm start.
pub fn sa_optimize_from(
    size: usize,
    params: &ChannelParams,
    objective: Objective,
    grid: &QuadratureGrid,
    config: &SaConfig,
    initial: Option<Constellation>,
) -> Result<(Constellation, AnnealTrace)> {
    let kernel = QuadratureKernel::new(*params, grid, PhaseRule::default());
    anneal(size, objective, config, initial, |c| Ok(kernel.prepare(c)?.evaluate(objective).raw_bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::ami_quadrature;
    use crate::model::{is_gray, reference_constellation, ReferenceKind};

    fn quick(seed: u64) -> SaConfig {
        SaConfig { iterations: 600, reanneal_count: 1, seed, record_every: 1, ..Default::default() }
    }

    fn grid() -> QuadratureGrid {
        QuadratureGrid::new(5).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SaConfig::default().validate().is_ok());
        let bad = [
            SaConfig { t_final: 0.0, ..Default::default() },
            SaConfig { t_initial: 1e-6, t_final: 1e-5, ..Default::default() },
            SaConfig { d_initial: 0.001, ..Default::default() },
            SaConfig { label_swap_prob: 1.5, ..Default::default() },
            SaConfig { iterations: 3, reanneal_count: 1, ..Default::default() },
            SaConfig { record_every: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn schedule_endpoints_and_monotone() {
        let c = SaConfig { iterations: 1000, reanneal_count: 0, ..Default::default() };
        assert_eq!(displacement_schedule(0, &c), c.d_initial);
        assert!((displacement_schedule(999, &c) - c.d_final).abs() < 1e-12);
        assert!((temperature_schedule(999, &c) - c.t_final).abs() < 1e-12);
        for s in 1..1000 {
            assert!(displacement_schedule(s, &c) <= displacement_schedule(s - 1, &c));
            assert!(temperature_schedule(s, &c) <= temperature_schedule(s - 1, &c));
        }
        let mid = displacement_schedule(333, &c);
        let want = c.d_initial * (c.d_final / c.d_initial).powf(333.0 / 999.0);
        assert!((mid - want).abs() < 1e-14);
    }

    #[test]
    fn metropolis_rule() {
        for t in [1e-9, 0.01, 1.0, 100.0] {
            assert!(metropolis_accept(0.1, t, 0.999_999));
            assert!(metropolis_accept(0.0, t, 0.999_999));
        }
        assert!(!metropolis_accept(-1e3, 0.01, 1e-300));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = 0.02;
        let n = 100_000;
        let hits = (0..n).filter(|_| metropolis_accept(-t, t, rng.random())).count();
        let rate = hits as f64 / n as f64;
        let expected = (-1.0f64).exp();
        assert!((rate - expected).abs() / expected < 0.01, "{rate}");
    }

    #[test]
    fn perturb_is_local_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_constellation(16, &mut rng).unwrap();
        for k in 0..50 {
            let draws = (rng.random(), rng.random());
            let (points, labels) = displaced(&c, k % 16, 0.3, draws);
            for (i, (a, b)) in points.iter().zip(c.points()).enumerate() {
                if i == k % 16 {
                    assert!((a - b).norm() <= 0.3 + 1e-15);
                } else {
                    assert_eq!(a, b);
                }
            }
            assert_eq!(labels, c.labels());
            let out = perturb_point(&c, k % 16, 0.3, draws).unwrap();
            assert!((out.average_power() - 1.0).abs() < 1e-12);
            assert_eq!(out.labels(), c.labels());
        }
        let still = perturb_point(&c, 3, 1e-300, (0.7, 0.2)).unwrap();
        for (a, b) in still.points().iter().zip(c.points()) {
            assert!((a - b).norm() < 1e-9);
        }
        assert!(matches!(perturb_point(&c, 16, 0.1, (0.5, 0.5)), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn swap_properties() {
        let psk = reference_constellation(ReferenceKind::Psk, 8, None).unwrap();
        assert!(is_gray(&psk));
        let once = swap_labels(&psk, 2, 3).unwrap();
        assert!(!is_gray(&once));
        assert_eq!(once.points(), psk.points());
        assert_eq!(swap_labels(&once, 2, 3).unwrap(), psk);
        let p = ChannelParams::from_snr_pnsd(9.0, 10.0).unwrap();
        let a = ami_quadrature(&psk, &p, &grid()).unwrap();
        let b = ami_quadrature(&once, &p, &grid()).unwrap();
        assert_eq!(a.bits.to_bits(), b.bits.to_bits());
        assert!(matches!(swap_labels(&psk, 0, 8), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn trace_invariants_and_determinism() {
        let p = ChannelParams::from_snr_pnsd(8.0, 15.0).unwrap();
        let cfg = quick(9);
        let (best, trace) = sa_optimize(4, &p, Objective::Pami, &grid(), &cfg).unwrap();
        assert_eq!(trace.rows.len(), cfg.iterations);
        assert!(trace.best_bits >= trace.initial_bits - 1e-9);
        assert!((best.average_power() - 1.0).abs() < 1e-12);
        let mut last = f64::NEG_INFINITY;
        for row in &trace.rows {
            assert!(row.best_bits >= last);
            assert!(row.best_bits >= row.current_bits);
            last = row.best_bits;
        }
        assert!(trace.rows.iter().any(|r| r.move_kind == MoveKind::Swap));
        let (again, trace2) = sa_optimize(4, &p, Objective::Pami, &grid(), &cfg).unwrap();
        assert_eq!(best, again);
        assert_eq!(trace, trace2);
        let (other, _) = sa_optimize(4, &p, Objective::Pami, &grid(), &quick(10)).unwrap();
        assert_ne!(best, other);
    }

    #[test]
    fn ami_runs_never_swap() {
        let p = ChannelParams::from_snr_pnsd(8.0, 0.0).unwrap();
        let (best, trace) = sa_optimize(4, &p, Objective::Ami, &grid(), &quick(3)).unwrap();
        assert!(trace.rows.iter().all(|r| r.move_kind == MoveKind::Point));
        let mut labels = best.labels().to_vec();
        labels.sort_unstable();
        assert_eq!(labels, [0, 1, 2, 3]);
    }

    #[test]
    fn zero_temperature_is_hill_climbing() {
        let p = ChannelParams::from_snr_pnsd(6.0, 10.0).unwrap();
        let cfg = SaConfig { t_initial: 1e-12, t_final: 1e-12, ..quick(4) };
        let (_, trace) = sa_optimize(4, &p, Objective::Ami, &grid(), &cfg).unwrap();
        let mut previous = trace.initial_bits;
        for (i, row) in trace.rows.iter().enumerate() {
            if row.pass > 0 && trace.rows[i - 1].pass != row.pass {
                previous = trace.rows[i - 1].best_bits;
            }
            if row.accepted {
                assert!(row.current_bits >= previous, "{row:?}");
            } else {
                assert_eq!(row.current_bits, previous);
            }
            previous = row.current_bits;
        }
    }

    #[test]
    fn warm_start_never_loses() {
        let p = ChannelParams::from_snr_pnsd(10.0, 5.0).unwrap();
        let psk = reference_constellation(ReferenceKind::Psk, 8, None).unwrap();
        let start = ami_quadrature(&psk, &p, &grid()).unwrap().raw_bits;
        let cfg = SaConfig { iterations: 200, ..quick(2) };
        let (_, trace) = sa_optimize_from(8, &p, Objective::Ami, &grid(), &cfg, Some(psk)).unwrap();
        assert_eq!(trace.initial_bits, start);
        assert!(trace.best_bits >= start);
    }

    #[test]
    fn rejects_bad_sizes() {
        let p = ChannelParams::awgn(10.0).unwrap();
        assert!(sa_optimize(3, &p, Objective::Ami, &grid(), &quick(0)).is_err());
        let psk = reference_constellation(ReferenceKind::Psk, 8, None).unwrap();
        assert!(sa_optimize_from(4, &p, Objective::Ami, &grid(), &quick(0), Some(psk)).is_err());
    }

    #[test]
    fn collisions_are_detected() {
        let pts = [Complex64::new(1.0, 0.0), Complex64::new(1.0 + 1e-10, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(collides(&pts, 1));
        assert!(!collides(&pts, 2));
    }
}
