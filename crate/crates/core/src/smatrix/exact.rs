//! Rational-arithmetic evaluation of the element series.
//!
//! `|G|²` of an f64 coupling is a dyadic rational, so every series term is an
//! exact rational. Unbounded indices are cut with the same tail rule as the
//! float path (magnitudes estimated in f64); the retained terms are summed
//! without rounding and only the prefactor `e^{±x/2} |G|^k √(n!…)` is applied
//! in floating point.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::series::{log_factorial, TailMonitor};
use super::{SeriesControl, TransitionLabel};
use crate::error::{Error, Result};

struct Factorials(Vec<BigInt>);

impl Factorials {
    fn new() -> Self {
        Factorials(vec![BigInt::one()])
    }

    fn get(&mut self, n: i64) -> BigInt {
        debug_assert!(n >= 0);
        let n = n as usize;
        while self.0.len() <= n {
            let k = self.0.len();
            let next = &self.0[k - 1] * BigInt::from(k);
            self.0.push(next);
        }
        self.0[n].clone()
    }
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidInput(format!("{x} has no rational representation")))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn pow(base: &BigRational, k: i64) -> BigRational {
    num_traits::pow(base.clone(), k as usize)
}

/// `Σ_s (u/2)^(s+t) (v/2)^s / ((s+t)! s!)`, truncated by the tail rule.
fn exchange_series(
    u: &BigRational,
    v: &BigRational,
    t: i64,
    ctl: &SeriesControl,
    facts: &mut Factorials,
) -> Result<BigRational> {
    let two = BigRational::from_integer(BigInt::from(2));
    let (hu, hv) = (u / &two, v / &two);
    let mut acc = BigRational::zero();
    let mut monitor = TailMonitor::new("exact exchange", ctl);
    let mut s = (-t).max(0);
    loop {
        let r = s + t;
        let term = pow(&hu, r) * pow(&hv, s) / BigRational::from_integer(facts.get(r) * facts.get(s));
        let mag = to_f64(&term);
        acc += term;
        if monitor.push(mag)? {
            break;
        }
        s += 1;
    }
    Ok(acc)
}

fn finish(pref_ln: f64, phase: f64, sum: &BigRational) -> Complex64 {
    if sum.is_zero() {
        return Complex64::new(0.0, 0.0);
    }
    // Split the rational into a power-of-two scale to avoid f64 overflow.
    let num_bits = sum.numer().bits() as i64;
    let den_bits = sum.denom().bits() as i64;
    let shift = num_bits - den_bits;
    let scaled = if shift >= 0 {
        sum / BigRational::from_integer(BigInt::one() << shift as usize)
    } else {
        sum * BigRational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let ln = pref_ln + shift as f64 * std::f64::consts::LN_2;
    Complex64::from_polar(to_f64(&scaled) * ln.exp(), phase)
}

pub(super) fn two_electron_normal(g: &[Complex64; 2], t: &TransitionLabel, ctl: &SeriesControl) -> Result<Complex64> {
    let (x1f, x2f) = (g[0].norm_sqr(), g[1].norm_sqr());
    let (x1, x2) = (rational(x1f)?, rational(x2f)?);
    let mut facts = Factorials::new();
    let (dj, dk, n_f) = (t.dj as i64, t.dk as i64, t.n_f as i64);

    let t_lo = -(dj + n_f);
    let t_hi = dk + n_f;
    let mut exchange = Vec::new();
    for tt in t_lo..=t_hi {
        let mut v = exchange_series(&x1, &x2, tt, ctl, &mut facts)?;
        if tt.rem_euclid(2) == 1 {
            v = -v;
        }
        exchange.push(v);
    }

    let mut sum = BigRational::zero();
    for m in 0..=n_f {
        for p in 0..=(n_f - m) {
            let (a, b) = (dj + m, dk + p);
            let mut inner = BigRational::zero();
            for tt in (-a).max(t_lo)..=b.min(t_hi) {
                let den = facts.get(a + tt) * facts.get(b - tt);
                inner += &exchange[(tt - t_lo) as usize] / BigRational::from_integer(den);
            }
            if inner.is_zero() {
                continue;
            }
            let mut term = pow(&x1, m) * pow(&x2, p) * inner
                / BigRational::from_integer(facts.get(m) * facts.get(p) * facts.get(n_f - m - p));
            if (m + p) % 2 == 1 {
                term = -term;
            }
            sum += term;
        }
    }
    let pref_ln = -0.5 * (x1f + x2f) + 0.5 * (log_factorial(t.n_i as u64) + log_factorial(t.n_f as u64));
    let pref_ln = fix_zero_powers(pref_ln, x1f, dj, x2f, dk);
    let phase = t.dj as f64 * g[0].arg() + t.dk as f64 * g[1].arg();
    Ok(finish(pref_ln, phase, &sum))
}

pub(super) fn two_electron_antinormal(
    g: &[Complex64; 2],
    t: &TransitionLabel,
    ctl: &SeriesControl,
) -> Result<Complex64> {
    let ctl = &tightened(ctl);
    let (x1f, x2f) = (g[0].norm_sqr(), g[1].norm_sqr());
    let (x1, x2) = (rational(x1f)?, rational(x2f)?);
    let mut facts = Factorials::new();
    let (dj, dk, n_f) = (t.dj as i64, t.dk as i64, t.n_f as i64);

    let mut exchange = std::collections::HashMap::new();
    let mut sum = BigRational::zero();
    let mut m_monitor = TailMonitor::new("exact antinormal (m)", ctl);
    let mut m = 0i64;
    loop {
        let mut m_block = 0.0;
        let mut p_monitor = TailMonitor::new("exact antinormal (p)", ctl);
        let mut p = (dk + dj - m).max(0);
        loop {
            let mut p_block = 0.0;
            for tt in (dk - p)..=(m - dj) {
                let (q, l) = (m - tt - dj, p + tt - dk);
                if q < 0 || l < 0 {
                    continue;
                }
                if !exchange.contains_key(&tt) {
                    let v = exchange_series(&x2, &x1, tt, ctl, &mut facts)?;
                    exchange.insert(tt, v);
                }
                let mut term =
                    pow(&x1, m) * pow(&x2, p) * &exchange[&tt] * BigRational::from_integer(facts.get(n_f + m + p))
                        / BigRational::from_integer(facts.get(m) * facts.get(p) * facts.get(q) * facts.get(l));
                if (m + p) % 2 == 1 {
                    term = -term;
                }
                p_block += to_f64(&term).abs();
                sum += term;
            }
            m_block += p_block;
            if p_monitor.push(p_block)? {
                break;
            }
            p += 1;
        }
        if m_monitor.push(m_block)? {
            break;
        }
        m += 1;
    }
    if (dj + dk).rem_euclid(2) == 1 {
        sum = -sum;
    }
    let pref_ln = 0.5 * (x1f + x2f) - 0.5 * (log_factorial(t.n_i as u64) + log_factorial(t.n_f as u64));
    let pref_ln = fix_zero_powers(pref_ln, x1f, -dj, x2f, -dk);
    let phase = t.dj as f64 * g[0].arg() + t.dk as f64 * g[1].arg();
    Ok(finish(pref_ln, phase, &sum))
}

pub(super) fn single_electron(g: Complex64, n_i: u32, n_f: u32, ctl: &SeriesControl) -> Result<Complex64> {
    let xf = g.norm_sqr();
    let x = rational(xf)?;
    let ctl = &tightened(ctl);
    let mut facts = Factorials::new();
    let dn = n_f as i64 - n_i as i64;
    let mut sum = BigRational::zero();
    let mut monitor = TailMonitor::new("exact single-electron", ctl);
    let mut m = (-dn).max(0);
    loop {
        let mut term = pow(&x, m) * BigRational::from_integer(facts.get(n_f as i64 + m))
            / BigRational::from_integer(facts.get(m) * facts.get(m + dn));
        if (m + dn).rem_euclid(2) == 1 {
            term = -term;
        }
        let mag = to_f64(&term).abs();
        sum += term;
        if monitor.push(mag)? {
            break;
        }
        m += 1;
    }
    let pref_ln = 0.5 * xf - 0.5 * (log_factorial(n_i as u64) + log_factorial(n_f as u64));
    let pref_ln = fix_zero_powers(pref_ln, xf, dn, 0.0, 0);
    Ok(finish(pref_ln, -(dn as f64) * g.arg(), &sum))
}

/// The alternating sums here cancel by many orders of magnitude, so tails
/// are cut far below the float tolerance.
fn tightened(ctl: &SeriesControl) -> SeriesControl {
    SeriesControl {
        term_tol: ctl.term_tol * 1e-16,
        max_index: ctl.max_index.max(400),
        ..*ctl
    }
}

/// Adds `k1 ln|G1| + k2 ln|G2|` with the convention `|G|^0 = 1`.
fn fix_zero_powers(base: f64, x1: f64, k1: i64, x2: f64, k2: i64) -> f64 {
    let part = |x: f64, k: i64| if k == 0 { 0.0 } else { 0.5 * k as f64 * x.ln() };
    base + part(x1, k1) + part(x2, k2)
}
