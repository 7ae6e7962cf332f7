//! Gauss-Hermite rules and the three-dimensional noise grid
//! (real noise, imaginary noise, phase).

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::model::ChannelParams;
use crate::special::log_i0;
use crate::{Error, Result};

/// Nodes per dimension used unless configured otherwise.
pub const DEFAULT_DEGREE: usize = 7;

/// Above this phase-noise standard deviation (degrees) the Gaussian
/// surrogate drifts away from the Tikhonov law.
pub const PNSD_WARNING_DEG: f64 = 30.0;

/// Nodes and weights of the `k`-point Gauss-Hermite rule for the weight
/// `exp(-t^2)`, in ascending node order.
///
/// Roots are found by Newton iteration on the orthonormal Hermite
/// recurrence, seeded with the usual asymptotic guesses, largest first.
pub fn gauss_hermite_nodes(k: usize) -> Result<Vec<(f64, f64)>> {
    if !(1..=30).contains(&k) {
        return Err(Error::DegreeOutOfRange(k));
    }
    let n = k as f64;
    let half = k.div_ceil(2);
    let mut roots: Vec<(f64, f64)> = Vec::with_capacity(half);
    let mut z = 0.0;
    for i in 0..half {
        z = match i {
            0 => libm::sqrt(2.0 * n + 1.0) - 1.85575 * libm::pow(2.0 * n + 1.0, -1.0 / 6.0),
            1 => z - 1.14 * libm::pow(n, 0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0].0,
            3 => 1.91 * z - 0.91 * roots[1].0,
            _ => 2.0 * z - roots[i - 2].0,
        };
        let mut slope = 0.0;
        for _ in 0..100 {
            let (value, derivative) = orthonormal_hermite(z, k);
            slope = derivative;
            let step = value / derivative;
            z -= step;
            if libm::fabs(step) <= 1e-15 * libm::fabs(z).max(1.0) {
                break;
            }
        }
        if k % 2 == 1 && i == half - 1 {
            z = 0.0;
            slope = orthonormal_hermite(0.0, k).1;
        }
        roots.push((z, 2.0 / (slope * slope)));
    }
    let mut rule: Vec<(f64, f64)> = roots.iter().map(|&(t, w)| (-t, w)).collect();
    rule.extend(roots.iter().rev().filter(|(t, _)| *t != 0.0).copied());
    Ok(rule)
}

/// Orthonormal Hermite polynomial of order `k` at `t` and the derivative
/// scale `sqrt(2k) * h_{k-1}(t)`.
fn orthonormal_hermite(t: f64, k: usize) -> (f64, f64) {
    let mut current = libm::pow(PI, -0.25);
    let mut previous = 0.0;
    for j in 1..=k {
        let jf = j as f64;
        let next = t * libm::sqrt(2.0 / jf) * current - libm::sqrt((jf - 1.0) / jf) * previous;
        previous = current;
        current = next;
    }
    (current, libm::sqrt(2.0 * k as f64) * previous)
}

/// How the phase dimension of the noise grid is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseRule {
    /// Hermite nodes placed at `sqrt(2) sigma_phi t`, weights multiplied by
    /// the Tikhonov-to-Gaussian density ratio and renormalized.
    #[default]
    Tikhonov,
    /// Hermite nodes and weights used as-is: the phase is treated as
    /// Gaussian with standard deviation `sigma_phi`.
    Gaussian,
}

/// A one-dimensional Gauss-Hermite rule of a given degree.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    degree: usize,
    rule: Vec<(f64, f64)>,
}

impl QuadratureGrid {
    pub fn new(degree: usize) -> Result<Self> {
        Ok(Self { degree, rule: gauss_hermite_nodes(degree)? })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes_weights(&self) -> &[(f64, f64)] {
        &self.rule
    }

    /// Product grid over the noise dimensions for a channel.
    ///
    /// Without phase noise the phase dimension collapses to a single node
    /// at zero with weight `sqrt(pi)`, so the weights always add up to
    /// `pi^(3/2)`.
    pub fn noise_grid(&self, params: &ChannelParams, phase_rule: PhaseRule) -> NoiseGrid {
        let scale = core::f64::consts::SQRT_2 * params.sigma();
        let phases = if params.has_phase_noise() {
            if params.pnsd_deg() > PNSD_WARNING_DEG {
                log::warn!(
                    "phase noise {:.1} deg exceeds {PNSD_WARNING_DEG} deg; quadrature accuracy degrades",
                    params.pnsd_deg()
                );
            }
            self.phase_nodes(params, phase_rule)
        } else {
            alloc::vec![(0.0, libm::sqrt(PI))]
        };
        let mut nodes = Vec::with_capacity(self.rule.len() * self.rule.len() * phases.len());
        for &(t_re, w_re) in &self.rule {
            for &(t_im, w_im) in &self.rule {
                let noise = Complex64::new(scale * t_re, scale * t_im);
                for &(phi, w_phi) in &phases {
                    nodes.push(NoiseNode {
                        noise,
                        rotor: Complex64::from_polar(1.0, phi),
                        weight: w_re * w_im * w_phi,
                    });
                }
            }
        }
        NoiseGrid { nodes }
    }

    fn phase_nodes(&self, params: &ChannelParams, phase_rule: PhaseRule) -> Vec<(f64, f64)> {
        let sigma = params.pnsd_rad();
        let k_phi = params.k_phi();
        let scale = core::f64::consts::SQRT_2 * sigma;
        match phase_rule {
            PhaseRule::Gaussian => self.rule.iter().map(|&(t, w)| (scale * t, w)).collect(),
            PhaseRule::Tikhonov => {
                // log of p_tikhonov(phi) / p_gauss(phi); constants cancel after
                // renormalization but are kept so the ratio stays near one.
                let log_norm = libm::log(sigma) + 0.5 * libm::log(2.0 * PI) - libm::log(2.0 * PI) - log_i0(k_phi);
                let mut nodes: Vec<(f64, f64)> = self
                    .rule
                    .iter()
                    .map(|&(t, w)| {
                        let phi = scale * t;
                        let log_ratio = k_phi * libm::cos(phi) + t * t + log_norm;
                        (phi, w * libm::exp(log_ratio))
                    })
                    .collect();
                let total: f64 = nodes.iter().map(|n| n.1).sum();
                let fix = libm::sqrt(PI) / total;
                for n in &mut nodes {
                    n.1 *= fix;
                }
                nodes
            }
        }
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::new(DEFAULT_DEGREE).expect("default degree is valid")
    }
}

/// One node of the noise grid: additive noise sample, phase rotor
/// `e^{j phi}` and the product weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseNode {
    pub noise: Complex64,
    pub rotor: Complex64,
    pub weight: f64,
}

/// Product grid over the noise dimensions for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    nodes: Vec<NoiseNode>,
}

impl NoiseGrid {
    pub fn nodes(&self) -> &[NoiseNode] {
        &self.nodes
    }

    pub fn total_weight(&self) -> f64 {
        crate::special::compensated_sum(self.nodes.iter().map(|n| n.weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// integral of t^p exp(-t^2) over the real line: 0 for odd p,
    /// (p-1)!! sqrt(pi) / 2^(p/2) for even p.
    fn moment(p: u32) -> f64 {
        if p % 2 == 1 {
            return 0.0;
        }
        let mut v = PI.sqrt();
        let mut k = 1.0;
        while k < p as f64 {
            v *= k / 2.0;
            k += 2.0;
        }
        v
    }

    #[test]
    fn one_and_two_point_rules() {
        let r1 = gauss_hermite_nodes(1).unwrap();
        assert_eq!(r1.len(), 1);
        assert_eq!(r1[0].0, 0.0);
        assert!((r1[0].1 - PI.sqrt()).abs() < 1e-15);

        let r2 = gauss_hermite_nodes(2).unwrap();
        assert!((r2[0].0 + 0.5f64.sqrt()).abs() < 1e-15);
        assert!((r2[1].0 - 0.5f64.sqrt()).abs() < 1e-15);
        for (_, w) in r2 {
            assert!((w - PI.sqrt() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_range() {
        assert_eq!(gauss_hermite_nodes(0), Err(Error::DegreeOutOfRange(0)));
        assert_eq!(gauss_hermite_nodes(31), Err(Error::DegreeOutOfRange(31)));
        assert!(QuadratureGrid::new(30).is_ok());
    }

    #[test]
    fn rules_are_exact_for_low_moments() {
        for k in 1..=30 {
            let rule = gauss_hermite_nodes(k).unwrap();
            assert_eq!(rule.len(), k);
            assert!(rule.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(rule.iter().all(|&(_, w)| w > 0.0));
            for i in 0..k {
                assert_eq!(rule[i].0, -rule[k - 1 - i].0);
                assert_eq!(rule[i].1, rule[k - 1 - i].1);
            }
            for p in 0..(2 * k as u32) {
                let got: f64 = rule.iter().map(|&(t, w)| w * t.powi(p as i32)).sum();
                let want = moment(p);
                let scale = want.abs().max(moment(p + p % 2));
                assert!((got - want).abs() <= 1e-9 * scale, "k={k} p={p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn degree_seven_reference_values() {
        // Abramowitz & Stegun table 25.10, n = 7
        let rule = gauss_hermite_nodes(7).unwrap();
        let expected = [
            (0.0, 0.810264617556807),
            (0.816287882858965, 0.425607252610128),
            (1.673551628767471, 0.054515582819127),
            (2.651961356835233, 0.971781245099519e-3),
        ];
        for (i, &(t, w)) in expected.iter().enumerate() {
            let (node, weight) = rule[3 + i];
            assert!((node - t).abs() < 1e-13, "node {i}");
            assert!((weight - w).abs() < 1e-13, "weight {i}");
        }
    }

    #[test]
    fn noise_grid_weights_sum_to_pi_three_halves() {
        let grid = QuadratureGrid::new(7).unwrap();
        let want = PI.powf(1.5);
        for (snr, pn) in [(12.0, 5.0), (3.0, 25.0), (15.0, 0.0)] {
            let params = ChannelParams::from_snr_pnsd(snr, pn).unwrap();
            for rule in [PhaseRule::Tikhonov, PhaseRule::Gaussian] {
                let ng = grid.noise_grid(&params, rule);
                let expected_len = if pn == 0.0 { 49 } else { 343 };
                assert_eq!(ng.nodes().len(), expected_len);
                assert!((ng.total_weight() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tikhonov_rule_reproduces_circular_moment() {
        // E[cos phi] = I1(k)/I0(k) under Tikhonov; the reweighted rule should
        // land close, the plain Gaussian one gives exp(-sigma^2/2).
        let grid = QuadratureGrid::new(15).unwrap();
        let params = ChannelParams::from_snr_pnsd(10.0, 20.0).unwrap();
        let k = params.k_phi();
        let phases = grid.phase_nodes(&params, PhaseRule::Tikhonov);
        let got: f64 = phases.iter().map(|&(p, w)| w * p.cos()).sum::<f64>() / PI.sqrt();
        // I1/I0 by direct summation of both series
        let (mut i0, mut i1, mut t0, mut t1) = (1.0, k / 2.0, 1.0, k / 2.0);
        for j in 1..200 {
            let jf = j as f64;
            t0 *= (k / 2.0).powi(2) / (jf * jf);
            t1 *= (k / 2.0).powi(2) / (jf * (jf + 1.0));
            i0 += t0;
            i1 += t1;
        }
        assert!((got - i1 / i0).abs() < 1e-4, "{got} vs {}", i1 / i0);
    }
}
