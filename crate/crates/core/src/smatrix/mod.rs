//! Closed-form S-matrix elements for one and two electrons coupled to a single
//! photon mode.
//!
//! Conventions: the scattering operator is
//! `S = exp(Σ_μ G_μ b_μ† a − G_μ* b_μ a†)`, where `b_μ†` raises electron `μ`
//! by one photon energy and `a` removes a photon. Elements are labelled by the
//! initial/final photon numbers and the per-electron energy gains, and vanish
//! unless `Δn + Δj + Δk = 0`.
//!
//! Two algebraically independent routes are provided for the two-electron
//! element:
//!
//! * [`element_two_electron`] factorizes `S` with creation operators on the
//!   left. Both photon-side indices are bounded by `n_f`; only the
//!   inter-electron exchange series is unbounded. This is the production path.
//! * [`element_two_electron_altorder`] uses the opposite ordering, in which the
//!   photon-side sums are unbounded and strongly alternating. It exists to
//!   cross-validate the first.
//!
//! Both share the real series machinery in [`series`]; with
//! [`Arithmetic::ExactRational`] the series are summed exactly over rationals
//! and only the final prefactor is taken in floating point.

mod exact;
pub mod series;

use std::collections::HashMap;

use num_complex::Complex64;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use series::{ln_pow, log_factorial, log_factorial_signed, ScaledSum, TailMonitor};

pub use series::{log_factorial as ln_factorial, ComplexSum, NeumaierSum};

/// Per-electron dimensionless couplings `G_μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSet {
    g: Vec<Complex64>,
}

impl CouplingSet {
    pub fn new(g: Vec<Complex64>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::InvalidInput("coupling set needs at least one electron".into()));
        }
        if let Some(bad) = g.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!("coupling G_{} is not finite", bad + 1)));
        }
        Ok(Self { g })
    }

    /// Real couplings, one per electron.
    pub fn real(g: &[f64]) -> Result<Self> {
        Self::new(g.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// `electrons` copies of the same coupling.
    pub fn uniform(g: Complex64, electrons: usize) -> Result<Self> {
        Self::new(vec![g; electrons])
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn get(&self, electron: usize) -> Complex64 {
        self.g[electron]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.g
    }

    /// `Σ_μ |G_μ|²`.
    pub fn strength(&self) -> f64 {
        self.g.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Σ_μ |G_μ|`.
    pub fn magnitude_sum(&self) -> f64 {
        self.g.iter().map(|z| z.norm()).sum()
    }

    /// The couplings restricted to a subset of electrons, in the given order.
    pub fn select(&self, electrons: &[usize]) -> Result<Self> {
        Self::new(electrons.iter().map(|&e| self.g[e]).collect())
    }
}

/// Photon numbers and per-electron energy gains (units of the photon energy)
/// of a two-electron transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionLabel {
    pub n_i: u32,
    pub n_f: u32,
    pub dj: i32,
    pub dk: i32,
}

impl TransitionLabel {
    pub fn new(n_i: u32, n_f: u32, dj: i32, dk: i32) -> Self {
        Self { n_i, n_f, dj, dk }
    }

    /// The transition out of `n_i` with the given gains; `None` if the photon
    /// number would go negative.
    pub fn from_gains(n_i: u32, dj: i32, dk: i32) -> Option<Self> {
        let n_f = n_i as i64 - dj as i64 - dk as i64;
        (n_f >= 0).then(|| Self::new(n_i, n_f as u32, dj, dk))
    }

    pub fn dn(&self) -> i64 {
        self.n_f as i64 - self.n_i as i64
    }

    /// `Δn + Δj + Δk == 0`.
    pub fn conserves_energy(&self) -> bool {
        self.dn() + self.dj as i64 + self.dk as i64 == 0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    #[default]
    LogGammaFloat,
    ExactRational,
}

/// Truncation policy for unbounded series indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesControl {
    pub term_tol: f64,
    pub max_index: usize,
    pub arithmetic: Arithmetic,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            term_tol: 1e-14,
            max_index: 200,
            arithmetic: Arithmetic::LogGammaFloat,
        }
    }
}

impl SeriesControl {
    pub fn exact() -> Self {
        Self {
            arithmetic: Arithmetic::ExactRational,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.term_tol > 0.0 && self.term_tol.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "term_tol must be positive, got {}",
                self.term_tol
            )));
        }
        if self.max_index < 1 {
            return Err(Error::InvalidInput("max_index must be at least 1".into()));
        }
        Ok(())
    }
}

/// Largest log-magnitude accepted before reporting overflow.
const LOG_OVERFLOW: f64 = 700.0;

fn check_overflow(log_magnitude: f64) -> Result<()> {
    if log_magnitude > LOG_OVERFLOW {
        Err(Error::NumericOverflow { log_magnitude })
    } else {
        Ok(())
    }
}

/// Signed log-magnitude of a real number.
#[derive(Clone, Copy, Debug, PartialEq)]
struct LogValue {
    ln: f64,
    negative: bool,
}

impl LogValue {
    const ZERO: LogValue = LogValue {
        ln: f64::NEG_INFINITY,
        negative: false,
    };

    fn from_scaled(sum: &ScaledSum) -> LogValue {
        let v = sum.scaled_total();
        if v == 0.0 {
            return LogValue::ZERO;
        }
        LogValue {
            ln: sum.log_scale + v.abs().ln(),
            negative: v < 0.0,
        }
    }

    fn is_zero(&self) -> bool {
        self.ln == f64::NEG_INFINITY
    }
}

/// Sums real terms given as (sign, log-magnitude), choosing the scale from the
/// first term. Terms far above the scale are handled by rescaling.
struct LogAccumulator {
    sum: Option<ScaledSum>,
}

impl LogAccumulator {
    fn new() -> Self {
        Self { sum: None }
    }

    fn add(&mut self, negative: bool, ln: f64) {
        if ln == f64::NEG_INFINITY {
            return;
        }
        match &mut self.sum {
            None => {
                let mut s = ScaledSum::new(ln);
                s.add_log(negative, ln);
                self.sum = Some(s);
            }
            Some(s) => {
                if ln - s.log_scale > 300.0 {
                    *s = s.rescaled(ln);
                }
                s.add_log(negative, ln);
            }
        }
    }

    fn value(&self) -> LogValue {
        self.sum.as_ref().map_or(LogValue::ZERO, LogValue::from_scaled)
    }

    /// ln of the sum of |terms|.
    fn ln_magnitude(&self) -> f64 {
        self.sum
            .as_ref()
            .map_or(f64::NEG_INFINITY, |s| s.log_scale + s.scaled_magnitude().ln())
    }
}

#[derive(Clone, Copy, Debug)]
struct Coupling {
    x: f64,
    ln_x: f64,
    ln_abs: f64,
    phase: f64,
}

impl Coupling {
    fn new(g: Complex64) -> Self {
        let x = g.norm_sqr();
        Self {
            x,
            ln_x: x.ln(),
            ln_abs: 0.5 * x.ln(),
            phase: g.arg(),
        }
    }

    fn is_zero(&self) -> bool {
        self.x == 0.0
    }
}

/// Log of the exchange series `Σ_s (u/2)^(s+t) (v/2)^s / ((s+t)! s!)` over all
/// `s ≥ max(0, −t)`, which is positive; returns `-inf` when it vanishes.
fn ln_exchange_series(ln_u: f64, ln_v: f64, t: i64, ctl: &SeriesControl, series: &'static str) -> Result<f64> {
    let half = std::f64::consts::LN_2;
    let mut acc = LogAccumulator::new();
    let mut monitor = TailMonitor::new(series, ctl);
    let mut s = (-t).max(0);
    loop {
        let r = s + t;
        let ln_term =
            ln_pow(ln_u - half, r) + ln_pow(ln_v - half, s) - log_factorial(r as u64) - log_factorial(s as u64);
        acc.add(false, ln_term);
        let scale = acc.sum.as_ref().map_or(0.0, |x| x.log_scale);
        if monitor.push((ln_term - scale).exp())? {
            break;
        }
        s += 1;
    }
    Ok(acc.value().ln)
}

/// Evaluator for two-electron elements at fixed couplings.
///
/// Caches nothing across calls and is `Sync`; use [`TwoElectronKernel::column`]
/// to evaluate every transition out of one initial photon number with shared
/// intermediate sums.
#[derive(Clone, Debug)]
pub struct TwoElectronKernel {
    g: [Complex64; 2],
    c: [Coupling; 2],
    ctl: SeriesControl,
}

/// Amplitudes of all significant transitions out of one initial state.
#[derive(Clone, Debug)]
pub struct Column {
    pub n_i: u32,
    pub entries: Vec<(TransitionLabel, Complex64)>,
    /// `1 − Σ|S|²` over the retained entries.
    pub deficit: f64,
}

impl TwoElectronKernel {
    pub fn new(c: &CouplingSet, ctl: &SeriesControl) -> Result<Self> {
        if c.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "two-electron element needs 2 couplings, got {}",
                c.len()
            )));
        }
        ctl.validate()?;
        let g = [c.get(0), c.get(1)];
        Ok(Self {
            g,
            c: [Coupling::new(g[0]), Coupling::new(g[1])],
            ctl: *ctl,
        })
    }

    pub fn element(&self, t: &TransitionLabel) -> Result<Complex64> {
        if !t.conserves_energy() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if let Some(v) = self.trivial(t)? {
            return Ok(v);
        }
        if self.ctl.arithmetic == Arithmetic::ExactRational {
            return exact::two_electron_normal(&self.g, t, &self.ctl);
        }
        let mut cache = ExchangeCache::default();
        self.element_cached(t, &mut cache)
    }

    /// Elements where an electron does not couple: that electron is untouched.
    fn trivial(&self, t: &TransitionLabel) -> Result<Option<Complex64>> {
        let zero = Complex64::new(0.0, 0.0);
        if (self.c[0].is_zero() && t.dj != 0) || (self.c[1].is_zero() && t.dk != 0) {
            return Ok(Some(zero));
        }
        if self.c[0].is_zero() && self.c[1].is_zero() {
            return Ok(Some(if t.n_f == t.n_i { Complex64::new(1.0, 0.0) } else { zero }));
        }
        Ok(None)
    }

    fn element_cached(&self, t: &TransitionLabel, cache: &mut ExchangeCache) -> Result<Complex64> {
        let [c1, c2] = self.c;
        let (dj, dk) = (t.dj as i64, t.dk as i64);
        let n_f = t.n_f as i64;
        let ln_pref = -0.5 * (c1.x + c2.x)
            + ln_pow(c1.ln_abs, dj)
            + ln_pow(c2.ln_abs, dk)
            + 0.5 * (log_factorial(t.n_i as u64) + log_factorial(t.n_f as u64));
        let mut acc = LogAccumulator::new();
        for m in 0..=n_f {
            for p in 0..=(n_f - m) {
                let h = self.inner(dj + m, dk + p, cache)?;
                if h.is_zero() {
                    continue;
                }
                let ln_term = ln_pref + ln_pow(c1.ln_x, m) + ln_pow(c2.ln_x, p)
                    - log_factorial(m as u64)
                    - log_factorial(p as u64)
                    - log_factorial((n_f - m - p) as u64)
                    + h.ln;
                check_overflow(ln_term)?;
                acc.add(((m + p) % 2 == 1) ^ h.negative, ln_term);
            }
        }
        let v = acc.value();
        if v.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let magnitude = if v.negative { -v.ln.exp() } else { v.ln.exp() };
        let phase = t.dj as f64 * c1.phase + t.dk as f64 * c2.phase;
        Ok(Complex64::from_polar(magnitude, phase))
    }

    /// `Σ_t F(t) / ((a+t)! (b−t)!)` with `F(t) = (−1)^t X(t)` the exchange series.
    fn inner(&self, a: i64, b: i64, cache: &mut ExchangeCache) -> Result<LogValue> {
        if let Some(v) = cache.inner.get(&(a, b)) {
            return Ok(*v);
        }
        let mut acc = LogAccumulator::new();
        for t in -a..=b {
            let ln_x = match cache.exchange.get(&t) {
                Some(v) => *v,
                None => {
                    let v =
                        ln_exchange_series(self.c[0].ln_x, self.c[1].ln_x, t, &self.ctl, "inter-electron exchange")?;
                    cache.exchange.insert(t, v);
                    v
                }
            };
            let (Some(fa), Some(fb)) = (log_factorial_signed(a + t), log_factorial_signed(b - t)) else {
                continue;
            };
            acc.add(t.rem_euclid(2) == 1, ln_x - fa - fb);
        }
        let v = acc.value();
        cache.inner.insert((a, b), v);
        Ok(v)
    }

    /// Every transition out of `|n_i, 0, 0⟩` whose probability exceeds
    /// `prune` and whose labels fit the cutoffs.
    ///
    /// Rows of fixed `n_f` are scanned outward from the centre of the
    /// energy-conservation diagonal until the probability stays below `prune`;
    /// rows stop once several consecutive rows past `n_i` carry negligible mass.
    pub fn column(&self, n_i: u32, n_cutoff: u32, window: (i32, i32), prune: f64) -> Result<Column> {
        const PATIENCE: usize = 4;
        let mut cache = ExchangeCache::default();
        let mut entries = Vec::new();
        let mut total = NeumaierSum::new();
        let mut quiet_rows = 0;
        let mut row_peak: f64 = 0.0;
        for n_f in 0..=n_cutoff {
            let d = n_i as i64 - n_f as i64;
            let lo = (window.0 as i64).max(d - window.1 as i64);
            let hi = (window.1 as i64).min(d - window.0 as i64);
            if lo > hi {
                continue;
            }
            let (x1, x2) = (self.c[0].x, self.c[1].x);
            let centre = if x1 + x2 > 0.0 {
                (d as f64 * x1 / (x1 + x2)).round() as i64
            } else {
                0
            };
            let centre = centre.clamp(lo, hi);
            let mut row_mass = 0.0;
            for direction in [1i64, -1] {
                let mut dj = if direction == 1 { centre } else { centre - 1 };
                let mut quiet = 0;
                let mut peak: f64 = 0.0;
                while dj >= lo && dj <= hi {
                    let label = TransitionLabel::new(n_i, n_f, dj as i32, (d - dj) as i32);
                    let amp = match self.trivial(&label)? {
                        Some(v) => v,
                        None if self.ctl.arithmetic == Arithmetic::ExactRational => self.element(&label)?,
                        None => self.element_cached(&label, &mut cache)?,
                    };
                    let p = amp.norm_sqr();
                    peak = peak.max(p);
                    if p > prune {
                        entries.push((label, amp));
                        total.add(p);
                        row_mass += p;
                        quiet = 0;
                    } else {
                        quiet += 1;
                        if quiet >= PATIENCE && (peak > prune || quiet >= 2 * PATIENCE + 8) {
                            break;
                        }
                    }
                    dj += direction;
                }
            }
            row_peak = row_peak.max(row_mass);
            if n_f > n_i && row_mass <= prune {
                quiet_rows += 1;
                if quiet_rows >= PATIENCE {
                    break;
                }
            } else {
                quiet_rows = 0;
            }
        }
        entries.sort_by_key(|(l, _)| (l.n_f, l.dj, l.dk));
        Ok(Column {
            n_i,
            entries,
            deficit: 1.0 - total.total(),
        })
    }
}

#[derive(Default)]
struct ExchangeCache {
    exchange: FxHashMap<i64, f64>,
    inner: FxHashMap<(i64, i64), LogValue>,
}

/// Two-electron element from the creation-left factorization (production path).
pub fn element_two_electron(c: &CouplingSet, t: &TransitionLabel, ctl: &SeriesControl) -> Result<Complex64> {
    TwoElectronKernel::new(c, ctl)?.element(t)
}

/// Two-electron element from the annihilation-left factorization.
///
/// Mathematically identical to [`element_two_electron`]; the photon-side
/// indices are unbounded here, so every index is under tail control.
pub fn element_two_electron_altorder(c: &CouplingSet, t: &TransitionLabel, ctl: &SeriesControl) -> Result<Complex64> {
    let kernel = TwoElectronKernel::new(c, ctl)?;
    if !t.conserves_energy() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if let Some(v) = kernel.trivial(t)? {
        return Ok(v);
    }
    if ctl.arithmetic == Arithmetic::ExactRational {
        return exact::two_electron_antinormal(&kernel.g, t, ctl);
    }
    let [c1, c2] = kernel.c;
    let (dj, dk) = (t.dj as i64, t.dk as i64);
    let n_f = t.n_f as i64;
    let ln_pref = 0.5 * (c1.x + c2.x)
        - ln_pow(c1.ln_abs, dj)
        - ln_pow(c2.ln_abs, dk)
        - 0.5 * (log_factorial(t.n_i as u64) + log_factorial(t.n_f as u64));
    let base_negative = (dj + dk).rem_euclid(2) == 1;

    // Exchange series with the roles of the two couplings swapped.
    let mut exchange: HashMap<i64, f64> = HashMap::new();
    let mut exchange_at = |t: i64| -> Result<f64> {
        if let Some(v) = exchange.get(&t) {
            return Ok(*v);
        }
        let v = ln_exchange_series(c2.ln_x, c1.ln_x, t, ctl, "inter-electron exchange")?;
        exchange.insert(t, v);
        Ok(v)
    };

    let mut acc = LogAccumulator::new();
    let mut m_monitor = TailMonitor::new("antinormal photon (m)", ctl);
    let mut m = 0i64;
    loop {
        let mut m_block = LogAccumulator::new();
        let mut p_monitor = TailMonitor::new("antinormal photon (p)", ctl);
        let mut p = (dk + dj - m).max(0);
        loop {
            let mut p_block = LogAccumulator::new();
            for t in (dk - p)..=(m - dj) {
                let q = m - t - dj;
                let l = p + t - dk;
                if q < 0 || l < 0 {
                    continue;
                }
                let ln_x = exchange_at(t)?;
                let ln_term = ln_pref + ln_pow(c1.ln_x, m) + ln_pow(c2.ln_x, p) + log_factorial((n_f + m + p) as u64)
                    - log_factorial(m as u64)
                    - log_factorial(p as u64)
                    - log_factorial(q as u64)
                    - log_factorial(l as u64)
                    + ln_x;
                check_overflow(ln_term)?;
                let negative = base_negative ^ ((m + p) % 2 == 1);
                acc.add(negative, ln_term);
                p_block.add(negative, ln_term);
                m_block.add(negative, ln_term);
            }
            let scale = m_block.sum.as_ref().map_or(0.0, |s| s.log_scale);
            if p_monitor.push((p_block.ln_magnitude() - scale).exp())? {
                break;
            }
            p += 1;
        }
        // With one coupling zero nothing contributes below m = dj + dk.
        if m_block.sum.is_none() && m < dj + dk {
            m += 1;
            continue;
        }
        let scale = acc.sum.as_ref().map_or(0.0, |s| s.log_scale);
        if m_monitor.push((m_block.ln_magnitude() - scale).exp())? {
            break;
        }
        m += 1;
    }
    let v = acc.value();
    if v.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let magnitude = if v.negative { -v.ln.exp() } else { v.ln.exp() };
    let phase = t.dj as f64 * c1.phase + t.dk as f64 * c2.phase;
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Single-electron element `⟨n_f, j_i−Δn| S |n_i, j_i⟩`; the electron gain is
/// fixed by `Δj = −Δn`.
pub fn element_single_electron(g: Complex64, n_i: u32, n_f: u32, ctl: &SeriesControl) -> Result<Complex64> {
    ctl.validate()?;
    if !(g.re.is_finite() && g.im.is_finite()) {
        return Err(Error::InvalidInput("coupling is not finite".into()));
    }
    let c = Coupling::new(g);
    if c.is_zero() {
        let v = if n_i == n_f { 1.0 } else { 0.0 };
        return Ok(Complex64::new(v, 0.0));
    }
    if ctl.arithmetic == Arithmetic::ExactRational {
        return exact::single_electron(g, n_i, n_f, ctl);
    }
    let dn = n_f as i64 - n_i as i64;
    let ln_pref = 0.5 * c.x + ln_pow(c.ln_abs, dn) - 0.5 * (log_factorial(n_i as u64) + log_factorial(n_f as u64));
    let m0 = (-dn).max(0);
    let ln_first = ln_pref + ln_pow(c.ln_x, m0) + log_factorial((n_f as i64 + m0) as u64)
        - log_factorial(m0 as u64)
        - log_factorial((m0 + dn) as u64);
    check_overflow(ln_first)?;
    let value = match single_electron_linear(c.x, n_f as i64, dn, m0, ctl)? {
        Some(rel) => rel * ln_first.exp(),
        None => single_electron_log(&c, n_f as i64, dn, ln_pref, ctl)?,
    };
    Ok(Complex64::from_polar(value, -(dn as f64) * c.phase))
}

/// Series relative to its first term, with terms from their ratio; `None` if
/// the terms outgrow the double range.
fn single_electron_linear(x: f64, n_f: i64, dn: i64, m0: i64, ctl: &SeriesControl) -> Result<Option<f64>> {
    let mut monitor = TailMonitor::new("single-electron", ctl);
    let mut sum = NeumaierSum::new();
    let mut term = if (m0 + dn).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
    let mut m = m0;
    loop {
        sum.add(term);
        if term.abs() > 1e280 {
            return Ok(None);
        }
        if monitor.push(term.abs())? {
            return Ok(Some(sum.total()));
        }
        term *= -x * (n_f + m + 1) as f64 / ((m + 1) as f64 * (m + dn + 1) as f64);
        m += 1;
    }
}

fn single_electron_log(c: &Coupling, n_f: i64, dn: i64, ln_pref: f64, ctl: &SeriesControl) -> Result<f64> {
    let mut acc = LogAccumulator::new();
    let mut monitor = TailMonitor::new("single-electron", ctl);
    let mut m = (-dn).max(0);
    loop {
        let ln_term = ln_pref + ln_pow(c.ln_x, m) + log_factorial((n_f + m) as u64)
            - log_factorial(m as u64)
            - log_factorial((m + dn) as u64);
        check_overflow(ln_term)?;
        acc.add((m + dn).rem_euclid(2) == 1, ln_term);
        let scale = acc.sum.as_ref().map_or(0.0, |s| s.log_scale);
        if monitor.push((ln_term - scale).exp())? {
            break;
        }
        m += 1;
    }
    let v = acc.value();
    if v.is_zero() {
        return Ok(0.0);
    }
    Ok(if v.negative { -v.ln.exp() } else { v.ln.exp() })
}
