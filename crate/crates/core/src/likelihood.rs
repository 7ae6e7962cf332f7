//! Per-symbol likelihood kernels for `y = x e^{j phi} + n`.
//!
//! With `z = conj(y) u`, the phase-dependent part of `log p(y | u, phi)` plus
//! the Tikhonov log-prior is
//!
//! ```text
//! f(phi) = k_phi cos(phi) + k_n Re(z e^{j phi}) = Re((k_phi + k_n z) e^{j phi})
//! ```
//!
//! The approximate metric keeps only the peak of `f` over `phi` instead of
//! integrating it. The peak sits at `phi = -arg(1 + A z)` and its value is
//! `|k_phi + k_n z|`. The exact likelihood integrates `exp(f)` instead, which
//! gives `2 pi I0(|k_phi + k_n z|)`.
//!
//! Metrics are defined up to an additive term that does not depend on the
//! hypothesis `u`; that term is never computed.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{ChannelParams, Constellation};
use crate::special::log_i0;
use crate::{Error, Result};

/// Default phase grid size for [`exact_log_likelihood`].
pub const DEFAULT_PHASE_GRID: usize = 2048;

const GRID_CONVERGENCE: f64 = 1e-8;
const MAX_PHASE_GRID: usize = 1 << 22;

/// Log of the Tikhonov density with concentration `k_phi` at `phi`.
pub fn tikhonov_log_pdf(phi: f64, k_phi: f64) -> Result<f64> {
    if !(k_phi >= 0.0) || !k_phi.is_finite() {
        return Err(Error::InvalidChannel("phase concentration must be finite and non-negative"));
    }
    Ok(k_phi * libm::cos(phi) - libm::log(2.0 * PI) - log_i0(k_phi))
}

/// Phase that maximizes `k_phi cos(phi) + k_n Re(z e^{j phi})`, given
/// `A = k_n / k_phi`. Returned in `(-pi, pi]`.
pub fn phase_estimate(z: Complex64, a_ratio: f64) -> f64 {
    if a_ratio == 0.0 {
        return 0.0;
    }
    let w = Complex64::new(1.0 + a_ratio * z.re, a_ratio * z.im);
    let mut phi = -libm::atan2(w.im, w.re);
    // f''(phi) / k_phi = -Re(w e^{j phi}); a positive value means we sit on
    // the minimum and the maximum is half a turn away.
    let curvature = -(w * Complex64::from_polar(1.0, phi)).re;
    if curvature > 0.0 {
        let other = phi + PI;
        if (w * Complex64::from_polar(1.0, other)).re > (w * Complex64::from_polar(1.0, phi)).re {
            phi = other;
        }
    }
    wrap_phase(phi)
}

fn wrap_phase(phi: f64) -> f64 {
    let mut phi = phi;
    while phi > PI {
        phi -= 2.0 * PI;
    }
    while phi <= -PI {
        phi += 2.0 * PI;
    }
    phi
}

/// Precomputed per-hypothesis terms for a fixed channel and constellation.
#[derive(Debug, Clone)]
pub struct MetricContext {
    params: ChannelParams,
    energy_terms: Vec<f64>,
}

impl MetricContext {
    pub fn new(params: ChannelParams, c: &Constellation) -> Self {
        let half_k_n = 0.5 * params.k_n();
        let energy_terms = c.points().iter().map(|u| -half_k_n * u.norm_sqr()).collect();
        Self { params, energy_terms }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// `-(k_n/2)|u|^2` for every constellation point.
    pub fn energy_terms(&self) -> &[f64] {
        &self.energy_terms
    }

    /// `lambda(phi) + k_n Re(z e^{j phi})` at the peak phase, evaluated by
    /// substituting the phase estimate.
    fn peak_term(&self, z: Complex64) -> f64 {
        let phi = phase_estimate(z, self.params.a_ratio());
        self.params.k_phi() * libm::cos(phi) + self.params.k_n() * (z * Complex64::from_polar(1.0, phi)).re
    }
}

/// Approximate `log p(y|u)` up to a hypothesis-independent constant, with
/// the phase integral replaced by its peak.
///
/// Without phase noise this is the AWGN metric `-(k_n/2)|u|^2 + k_n Re(conj(y) u)`.
pub fn decision_metric(y: Complex64, u: Complex64, ctx: &MetricContext) -> f64 {
    let energy = -0.5 * ctx.params.k_n() * u.norm_sqr();
    let z = y.conj() * u;
    if !ctx.params.has_phase_noise() {
        return energy + ctx.params.k_n() * z.re;
    }
    energy + ctx.peak_term(z)
}

/// The same value as [`decision_metric`] through the closed form
/// `-(k_n/2)|u|^2 + |k_phi + k_n conj(y) u|`. Used by the evaluators.
#[inline]
pub fn peak_metric(y: Complex64, u: Complex64, params: &ChannelParams) -> f64 {
    let k_n = params.k_n();
    let z = y.conj() * u;
    let energy = -0.5 * k_n * u.norm_sqr();
    if params.has_phase_noise() {
        let w = Complex64::new(params.k_phi() + k_n * z.re, k_n * z.im);
        energy + libm::sqrt(w.re * w.re + w.im * w.im)
    } else {
        energy + k_n * z.re
    }
}

/// Approximate `log(p(y|u) / p(y|x))`, written out term by term.
pub fn log_ratio(y: Complex64, u: Complex64, x: Complex64, ctx: &MetricContext) -> f64 {
    if u == x {
        return 0.0;
    }
    let k_n = ctx.params.k_n();
    let zu = y.conj() * u;
    let zx = y.conj() * x;
    if !ctx.params.has_phase_noise() {
        return 0.5 * k_n * (2.0 * zu.re - 2.0 * zx.re - u.norm_sqr() + x.norm_sqr());
    }
    let a = ctx.params.a_ratio();
    let k_phi = ctx.params.k_phi();
    let phi_u = phase_estimate(zu, a);
    let phi_x = phase_estimate(zx, a);
    k_phi * libm::cos(phi_u) - k_phi * libm::cos(phi_x)
        + 0.5
            * k_n
            * (2.0 * (zu * Complex64::from_polar(1.0, phi_u)).re - 2.0 * (zx * Complex64::from_polar(1.0, phi_x)).re
                - u.norm_sqr()
                + x.norm_sqr())
}

/// True `log p(y|u)` (all constants included) by trapezoidal integration of
/// the phase over `[-pi, pi)`.
///
/// Starts at `n_grid` points and doubles until two successive estimates
/// differ by less than `1e-8`.
pub fn exact_log_likelihood(y: Complex64, u: Complex64, params: &ChannelParams, n_grid: usize) -> Result<f64> {
    if n_grid < 64 || !n_grid.is_multiple_of(2) {
        return Err(Error::GridTooSmall(n_grid));
    }
    if !params.has_phase_noise() {
        return Err(Error::InvalidChannel("trapezoidal likelihood needs finite phase concentration"));
    }
    let mut n = n_grid;
    let mut previous = trapezoid_log_likelihood(y, u, params, n);
    while n < MAX_PHASE_GRID {
        n *= 2;
        let next = trapezoid_log_likelihood(y, u, params, n);
        if libm::fabs(next - previous) < GRID_CONVERGENCE {
            return Ok(next);
        }
        previous = next;
    }
    log::warn!("phase grid did not converge at {n} points");
    Ok(previous)
}

fn trapezoid_log_likelihood(y: Complex64, u: Complex64, params: &ChannelParams, n: usize) -> f64 {
    let k_n = params.k_n();
    let k_phi = params.k_phi();
    let step = 2.0 * PI / n as f64;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for i in 0..n {
        let phi = -PI + i as f64 * step;
        let d = y - u * Complex64::from_polar(1.0, phi);
        let v = k_phi * libm::cos(phi) - 0.5 * k_n * d.norm_sqr();
        if v > max {
            sum = sum * libm::exp(max - v) + 1.0;
            max = v;
        } else {
            sum += libm::exp(v - max);
        }
    }
    let log_integral = max + libm::log(sum) + libm::log(step);
    log_integral + libm::log(k_n / (2.0 * PI)) - libm::log(2.0 * PI) - log_i0(k_phi)
}

/// Exact `log p(y|u)` through the closed form of the phase integral,
/// `2 pi I0(|k_phi + k_n conj(y) u|)`. Handles `k_phi = +inf`.
#[derive(Debug, Clone, Copy)]
pub struct ExactKernel {
    params: ChannelParams,
    log_norm: f64,
}

impl ExactKernel {
    pub fn new(params: ChannelParams) -> Self {
        let mut log_norm = libm::log(params.k_n() / (2.0 * PI));
        if params.has_phase_noise() {
            log_norm -= log_i0(params.k_phi());
        }
        Self { params, log_norm }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// `log p(y|u)` minus the terms that do not depend on `u`.
    #[inline]
    pub fn relative(&self, y: Complex64, u: Complex64) -> f64 {
        let k_n = self.params.k_n();
        let z = y.conj() * u;
        let energy = -0.5 * k_n * u.norm_sqr();
        if self.params.has_phase_noise() {
            let w = Complex64::new(self.params.k_phi() + k_n * z.re, k_n * z.im);
            energy + log_i0(libm::sqrt(w.re * w.re + w.im * w.im))
        } else {
            energy + k_n * z.re
        }
    }

    pub fn log_likelihood(&self, y: Complex64, u: Complex64) -> f64 {
        self.log_norm - 0.5 * self.params.k_n() * y.norm_sqr() + self.relative(y, u)
    }
}

/// Exact `log p(y|u)` via the Bessel closed form.
pub fn exact_log_likelihood_bessel(y: Complex64, u: Complex64, params: &ChannelParams) -> f64 {
    ExactKernel::new(*params).log_likelihood(y, u)
}
