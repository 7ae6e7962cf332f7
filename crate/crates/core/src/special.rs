//! Scalar helpers: logarithm of the modified Bessel function `I0`,
//! log-sum-exp and compensated summation.

use core::f64::consts::PI;

const SERIES_LIMIT: f64 = 20.0;

/// Natural logarithm of the modified Bessel function of the first kind,
/// order zero.
///
/// Uses the ascending power series up to `x = 20` and the large-argument
/// expansion `x - ln(2 pi x)/2 + ln(sum)` above, so the result stays finite
/// far beyond the point where `I0` itself overflows (`x ~ 700`).
/// `I0` is even, so negative arguments are folded.
pub fn log_i0(x: f64) -> f64 {
    let x = libm::fabs(x);
    if x <= SERIES_LIMIT {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        libm::log(sum)
    } else {
        let inv8x = 1.0 / (8.0 * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0_f64;
        loop {
            let odd = 2.0 * k - 1.0;
            let next = term * odd * odd * inv8x / k;
            // asymptotic series: stop at the smallest term
            if next >= term || next <= sum * 1e-17 {
                if next < term {
                    sum += next;
                }
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        x - 0.5 * libm::log(2.0 * PI * x) + libm::log(sum)
    }
}

/// `ln(sum(exp(v)))` over the values, shifted by the running maximum.
///
/// Returns `-inf` for an empty input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for v in values {
        if v == f64::NEG_INFINITY {
            continue;
        }
        if v > max {
            sum = sum * libm::exp(max - v) + 1.0;
            max = v;
        } else {
            sum += libm::exp(v - max);
        }
    }
    if max == f64::NEG_INFINITY {
        max
    } else {
        max + libm::log(sum)
    }
}

/// Two-pass log-sum-exp over a slice: find the max, then accumulate.
/// Cheaper than [`log_sum_exp`] when the values are already in memory.
#[inline]
pub fn log_sum_exp_slice(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

/// Neumaier (improved Kahan) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if libm::fabs(self.sum) >= libm::fabs(value) {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}
