//! Factorials, compensated sums and tail control shared by every series in the crate.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::SeriesControl;

const TABLE_LEN: usize = 2048;

/// ln(n!) for n up to 20 from the exact integer product, beyond that from
/// the Stirling series (relative error well below 1e-15 for n > 20).
pub fn log_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return table()[n as usize];
    }
    stirling(n)
}

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(TABLE_LEN);
        let mut exact: u64 = 1;
        for n in 0..TABLE_LEN as u64 {
            if n <= 20 {
                if n > 0 {
                    exact *= n;
                }
                out.push((exact as f64).ln());
            } else {
                out.push(stirling(n));
            }
        }
        out
    })
}

fn stirling(n: u64) -> f64 {
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let correction =
        inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + correction
}

/// ln of a factorial for a possibly negative argument; `None` where 1/n! vanishes.
#[inline]
pub(crate) fn log_factorial_signed(n: i64) -> Option<f64> {
    (n >= 0).then(|| log_factorial(n as u64))
}

/// `k * ln(x)` with the convention 0 * ln(0) = 0.
#[inline]
pub(crate) fn ln_pow(ln_x: f64, k: i64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_x
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of complex numbers, component-wise.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }
}

/// Decides when to cut an unbounded series index.
///
/// Fed with the absolute magnitude of each successive block of terms (a block
/// being everything summed at one value of the unbounded index). The series is
/// cut once blocks are decreasing, the current block is below
/// `term_tol * peak`, and a geometric extrapolation of the remaining tail is
/// below the same bound.
#[derive(Clone, Debug)]
pub(crate) struct TailMonitor {
    series: &'static str,
    term_tol: f64,
    max_index: usize,
    peak: f64,
    prev: f64,
    seen: usize,
}

impl TailMonitor {
    pub(crate) fn new(series: &'static str, ctl: &SeriesControl) -> Self {
        Self {
            series,
            term_tol: ctl.term_tol,
            max_index: ctl.max_index,
            peak: 0.0,
            prev: f64::INFINITY,
            seen: 0,
        }
    }

    /// Records one block; `Ok(true)` means stop summing.
    pub(crate) fn push(&mut self, block_magnitude: f64) -> Result<bool> {
        self.seen += 1;
        if !block_magnitude.is_finite() {
            return Err(Error::NumericOverflow {
                log_magnitude: block_magnitude.ln(),
            });
        }
        if block_magnitude == 0.0 {
            return Ok(true);
        }
        self.peak = self.peak.max(block_magnitude);
        let bound = self.term_tol * self.peak;
        let stop = if block_magnitude <= bound && block_magnitude < self.prev {
            let ratio = block_magnitude / self.prev;
            ratio < 1.0 && block_magnitude * ratio / (1.0 - ratio) <= bound
        } else {
            false
        };
        self.prev = block_magnitude;
        if stop {
            return Ok(true);
        }
        if self.seen >= self.max_index {
            return Err(Error::SeriesNotConverged {
                series: self.series,
                max_index: self.max_index,
            });
        }
        Ok(false)
    }

    #[cfg(test)]
    pub(crate) fn peak(&self) -> f64 {
        self.peak
    }
}

/// Running sum of real terms held as `exp(log_scale) * value`, so very large or
/// very small magnitudes can be combined without overflow.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ScaledSum {
    pub(crate) log_scale: f64,
    sum: NeumaierSum,
    magnitude: f64,
}

impl ScaledSum {
    pub(crate) fn new(log_scale: f64) -> Self {
        Self {
            log_scale,
            sum: NeumaierSum::new(),
            magnitude: 0.0,
        }
    }

    /// Adds `sign * exp(log_magnitude)`.
    #[inline]
    pub(crate) fn add_log(&mut self, negative: bool, log_magnitude: f64) {
        let v = (log_magnitude - self.log_scale).exp();
        self.magnitude += v;
        self.sum.add(if negative { -v } else { v });
    }

    /// The same sum expressed relative to a new scale.
    pub(crate) fn rescaled(&self, log_scale: f64) -> ScaledSum {
        let factor = (self.log_scale - log_scale).exp();
        let mut sum = NeumaierSum::new();
        sum.add(self.sum.total() * factor);
        ScaledSum {
            log_scale,
            sum,
            magnitude: self.magnitude * factor,
        }
    }

    /// Signed total relative to `exp(log_scale)`.
    pub(crate) fn scaled_total(&self) -> f64 {
        self.sum.total()
    }

    /// Sum of absolute terms relative to `exp(log_scale)`.
    pub(crate) fn scaled_magnitude(&self) -> f64 {
        self.magnitude
    }
}
