//! Sparse application of the N-electron scattering operator to a truncated
//! photon ⊗ electrons state.
//!
//! The simultaneous operator is applied as a product of exponential factors
//! (single-electron photon emission/absorption and pairwise electron
//! exchange). Successive interaction composes single-electron scatterings,
//! each evaluated from the closed-form single-electron element. For large
//! `|G|√n` the factorized forms cancel badly; [`scatter_blocks`] exponentiates
//! the generator block by block instead.

mod blocks;
mod expm;
pub mod oracle;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smatrix::{element_single_electron, Arithmetic, CouplingSet, NeumaierSum, SeriesControl};
use crate::states::PhotonState;
use expm::{expm_action, SparseColumns};

pub use blocks::scatter_blocks;
pub use oracle::{dense_oracle, DenseOracle};

/// Largest number of electrons a basis label can carry.
pub const MAX_ELECTRONS: usize = 8;

/// Basis label `|n, j_1, …, j_N⟩`; unused electron slots stay 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Label {
    pub n: u32,
    pub j: [i32; MAX_ELECTRONS],
}

impl std::hash::Hash for Label {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        // Equal labels pack equally; collisions only cost a comparison.
        let pack = |js: &[i32]| js.iter().fold(0u64, |acc, &v| (acc << 16) ^ (v as u16 as u64));
        state.write_u64(pack(&self.j[..4]) ^ ((self.n as u64) << 48).rotate_left(7));
        state.write_u64(pack(&self.j[4..]));
    }
}

impl Label {
    pub fn new(n: u32, j: &[i32]) -> Self {
        let mut arr = [0; MAX_ELECTRONS];
        arr[..j.len()].copy_from_slice(j);
        Self { n, j: arr }
    }

    pub fn photons(n: u32) -> Self {
        Self::new(n, &[])
    }

    /// `n + Σ_μ j_μ`, conserved by the interaction.
    pub fn excitation(&self) -> i64 {
        self.n as i64 + self.j.iter().map(|&v| v as i64).sum::<i64>()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionMode {
    #[default]
    Simultaneous,
    Successive,
}

/// Which BCH factorization of the simultaneous operator to apply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorOrdering {
    /// Emission factors leftmost, absorption rightmost.
    #[default]
    Normal,
    /// Absorption factors leftmost, emission rightmost.
    Antinormal,
}

/// Cutoffs for the truncated basis. `None` picks a default from the couplings
/// and the initial photon distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    pub n_cutoff: Option<u32>,
    pub j_window: Option<(i32, i32)>,
    pub dropped_budget: f64,
    pub prune_tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            n_cutoff: None,
            j_window: None,
            dropped_budget: 1e-6,
            prune_tol: 1e-32,
        }
    }
}

/// Cutoffs with every default filled in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub n_cutoff: u32,
    pub j_window: (i32, i32),
    pub dropped_budget: f64,
    pub prune_tol: f64,
}

impl Cutoffs {
    fn contains(&self, j: i32) -> bool {
        j >= self.j_window.0 && j <= self.j_window.1
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if !(self.dropped_budget > 0.0 && self.dropped_budget < 1.0) {
            return Err(Error::InvalidInput(format!(
                "dropped_budget must lie in (0, 1), got {}",
                self.dropped_budget
            )));
        }
        if !(self.prune_tol >= 0.0 && self.prune_tol < 1e-6) {
            return Err(Error::InvalidInput(format!(
                "prune_tol must lie in [0, 1e-6), got {}",
                self.prune_tol
            )));
        }
        if let Some((lo, hi)) = self.j_window {
            if lo > 0 || hi < 0 {
                return Err(Error::InvalidInput(format!(
                    "electron window [{lo}, {hi}] must contain 0"
                )));
            }
        }
        Ok(())
    }

    /// Default photon cutoff `⌈(√n0 + Σ|G| + 6)²⌉` and electron window
    /// `±(n_cutoff + ⌈4 Σ|G|²⌉)`, where `n0` is the largest initial photon number.
    pub fn resolve(&self, c: &CouplingSet, n0_max: u32) -> Result<Cutoffs> {
        self.validate()?;
        let n_cutoff = self
            .n_cutoff
            .unwrap_or_else(|| ((n0_max as f64).sqrt() + c.magnitude_sum() + 6.0).powi(2).ceil() as u32);
        if n_cutoff < n0_max {
            return Err(Error::InvalidInput(format!(
                "photon cutoff {n_cutoff} is below the initial photon number {n0_max}"
            )));
        }
        let j_window = self.j_window.unwrap_or_else(|| {
            let w = n_cutoff as i32 + (4.0 * c.strength()).ceil() as i32;
            (-w, w)
        });
        Ok(Cutoffs {
            n_cutoff,
            j_window,
            dropped_budget: self.dropped_budget,
            prune_tol: self.prune_tol,
        })
    }
}

/// Sparse amplitudes over `|n, j_1, …, j_N⟩`.
#[derive(Clone, Debug)]
pub struct JointAmplitude {
    electrons: usize,
    entries: FxHashMap<Label, Complex64>,
    n_cutoff: u32,
    j_window: (i32, i32),
    dropped_mass: f64,
}

impl JointAmplitude {
    pub fn new(electrons: usize, n_cutoff: u32, j_window: (i32, i32)) -> Result<Self> {
        if electrons == 0 || electrons > MAX_ELECTRONS {
            return Err(Error::InvalidInput(format!(
                "electron count must lie in 1..={MAX_ELECTRONS}, got {electrons}"
            )));
        }
        Ok(Self {
            electrons,
            entries: FxHashMap::default(),
            n_cutoff,
            j_window,
            dropped_mass: 0.0,
        })
    }

    /// `|ψ_photon⟩ ⊗ |0, …, 0⟩`; the photon state's truncated mass is carried
    /// over as dropped mass.
    pub fn from_photon(photon: &PhotonState, electrons: usize, n_cutoff: u32, j_window: (i32, i32)) -> Result<Self> {
        let amps = photon
            .amplitudes()
            .ok_or_else(|| Error::InvalidInput("mixed photon states must be split into pure components".into()))?;
        let mut out = Self::new(electrons, n_cutoff, j_window)?;
        for (n, a) in amps {
            if n > n_cutoff {
                out.dropped_mass += a.norm_sqr();
            } else {
                out.entries.insert(Label::photons(n), a);
            }
        }
        out.dropped_mass += photon.truncated_mass();
        Ok(out)
    }

    pub fn insert(&mut self, label: Label, amplitude: Complex64) {
        self.entries.insert(label, amplitude);
    }

    pub fn electrons(&self) -> usize {
        self.electrons
    }

    pub fn n_cutoff(&self) -> u32 {
        self.n_cutoff
    }

    pub fn j_window(&self) -> (i32, i32) {
        self.j_window
    }

    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &Label) -> Complex64 {
        self.entries.get(label).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &Complex64)> {
        self.entries.iter()
    }

    /// Entries in label order.
    pub fn sorted(&self) -> Vec<(Label, Complex64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(l, a)| (*l, *a)).collect();
        v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sorted()
            .iter()
            .map(|(_, a)| a.norm_sqr())
            .collect::<NeumaierSum>()
            .total()
    }

    /// Photon-number populations of the initial entries, used for cutoff defaults.
    pub fn max_photons(&self) -> u32 {
        self.entries.keys().map(|l| l.n).max().unwrap_or(0)
    }

    fn empty_like(&self) -> Self {
        Self {
            electrons: self.electrons,
            entries: FxHashMap::default(),
            n_cutoff: self.n_cutoff,
            j_window: self.j_window,
            dropped_mass: self.dropped_mass,
        }
    }

    fn with_cutoffs(mut self, cut: &Cutoffs) -> Self {
        self.n_cutoff = cut.n_cutoff;
        self.j_window = cut.j_window;
        self
    }

    fn prune(&mut self, tol: f64) {
        if tol <= 0.0 {
            return;
        }
        let mut lost = NeumaierSum::new();
        self.entries.retain(|_, a| {
            let p = a.norm_sqr();
            if p < tol {
                lost.add(p);
                false
            } else {
                true
            }
        });
        self.dropped_mass += lost.total();
    }

    /// Entries in map order, which is deterministic for a given history.
    fn source_order(&self) -> Vec<(Label, Complex64)> {
        self.entries.iter().map(|(l, a)| (*l, *a)).collect()
    }
}

/// One exponential factor `exp(coeff · X)` of the scattering operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    /// `X = b_μ a†`: the photon number rises, electron `μ` loses energy.
    Emit { electron: usize, coeff: Complex64 },
    /// `X = b_μ† a`: the photon number falls, electron `μ` gains energy.
    Absorb { electron: usize, coeff: Complex64 },
    /// `X = b_lower b_raise†`: energy moves from electron `lower` to `raise`.
    Exchange {
        lower: usize,
        raise: usize,
        coeff: Complex64,
    },
}

impl Factor {
    fn coeff(&self) -> Complex64 {
        match *self {
            Factor::Emit { coeff, .. } | Factor::Absorb { coeff, .. } | Factor::Exchange { coeff, .. } => coeff,
        }
    }

    /// The conserved line through `label` (as a key label) and the position on it.
    fn line(&self, label: &Label) -> (Label, i64) {
        let mut key = *label;
        match *self {
            Factor::Emit { electron, .. } | Factor::Absorb { electron, .. } => {
                key.j[electron] += label.n as i32;
                key.n = 0;
                (key, label.n as i64)
            }
            Factor::Exchange { lower, raise, .. } => {
                key.j[raise] += label.j[lower];
                key.j[lower] = 0;
                (key, label.j[raise] as i64)
            }
        }
    }

    fn at(&self, key: &Label, pos: i64) -> Label {
        let mut l = *key;
        match *self {
            Factor::Emit { electron, .. } | Factor::Absorb { electron, .. } => {
                l.n = pos as u32;
                l.j[electron] = key.j[electron] - pos as i32;
            }
            Factor::Exchange { lower, raise, .. } => {
                l.j[raise] = pos as i32;
                l.j[lower] = key.j[raise] - pos as i32;
            }
        }
        l
    }

    fn inside(&self, l: &Label, cut: &Cutoffs) -> bool {
        match *self {
            Factor::Emit { electron, .. } | Factor::Absorb { electron, .. } => {
                l.n <= cut.n_cutoff && cut.contains(l.j[electron])
            }
            Factor::Exchange { lower, raise, .. } => cut.contains(l.j[lower]) && cut.contains(l.j[raise]),
        }
    }

    fn electrons(&self) -> (usize, Option<usize>) {
        match *self {
            Factor::Emit { electron, .. } | Factor::Absorb { electron, .. } => (electron, None),
            Factor::Exchange { lower, raise, .. } => (lower, Some(raise)),
        }
    }
}

/// Series cut shared by the factor expansions: stop once terms decrease and
/// fall below `term_tol` of the largest term or below an absolute floor.
struct TermCut {
    peak: f64,
    prev: f64,
    tol: f64,
    floor: f64,
}

impl TermCut {
    fn new(tol: f64, floor: f64) -> Self {
        Self {
            peak: 0.0,
            prev: f64::INFINITY,
            tol,
            floor,
        }
    }

    fn done(&mut self, magnitude: f64) -> bool {
        self.peak = self.peak.max(magnitude);
        let small = magnitude <= self.tol * self.peak || magnitude < self.floor;
        let stop = magnitude == 0.0 || (magnitude < self.prev && small);
        self.prev = magnitude;
        stop
    }
}

/// Applies `exp(coeff · X)` term by term to every entry.
///
/// Each factor moves amplitude along a line on which one combination of
/// labels is conserved (`n + j_μ` for emission/absorption, `j_λ + j_ρ` for
/// exchange). Entries are grouped by line and each line is expanded on a
/// dense array; lines are independent, so they run in parallel and their
/// outputs never overlap.
///
/// Terms landing outside the cutoffs are discarded and their weight added to
/// the dropped mass; the call fails if that exceeds the budget.
pub fn apply_exponential(
    state: &JointAmplitude,
    factor: &Factor,
    ctl: &SeriesControl,
    cut: &Cutoffs,
) -> Result<JointAmplitude> {
    let (a, b) = factor.electrons();
    if a >= state.electrons || b.is_some_and(|b| b >= state.electrons || b == a) {
        return Err(Error::InvalidInput(format!(
            "factor {factor:?} does not fit a {}-electron state",
            state.electrons
        )));
    }
    if factor.coeff().norm_sqr() == 0.0 {
        return Ok(state.clone());
    }
    let mut lines: FxHashMap<Label, Vec<(i64, Complex64)>> = FxHashMap::default();
    for (label, amp) in state.iter() {
        let (key, pos) = factor.line(label);
        lines.entry(key).or_default().push((pos, *amp));
    }
    let mut lines: Vec<_> = lines.into_iter().collect();
    lines.sort_unstable_by(|x, y| x.0.cmp(&y.0));
    let floor = 1e-3 * cut.prune_tol.sqrt();
    let expanded: Vec<Result<(Vec<(Label, Complex64)>, f64)>> = lines
        .par_iter()
        .map(|(key, sources)| expand_line(factor, key, sources, ctl, cut, floor))
        .collect();
    let mut out = state.empty_like();
    out.entries.reserve(state.len());
    let mut spill = NeumaierSum::new();
    for line in expanded {
        let (entries, lost) = line?;
        spill.add(lost);
        out.entries.extend(entries);
    }
    out.dropped_mass += spill.total();
    out.prune(cut.prune_tol);
    if out.dropped_mass > cut.dropped_budget {
        return Err(Error::CutoffBudgetExceeded {
            dropped: out.dropped_mass,
            budget: cut.dropped_budget,
        });
    }
    Ok(out)
}

fn expand_line(
    factor: &Factor,
    key: &Label,
    sources: &[(i64, Complex64)],
    ctl: &SeriesControl,
    cut: &Cutoffs,
    floor: f64,
) -> Result<(Vec<(Label, Complex64)>, f64)> {
    let coeff = factor.coeff();
    let base = match factor {
        Factor::Absorb { .. } => 0,
        _ => sources.iter().map(|s| s.0).min().unwrap_or(0),
    };
    let mut acc: Vec<Complex64> = Vec::new();
    let limit = ctl.max_index.max(4 * cut.n_cutoff as usize);
    for &(pos, amp) in sources {
        let mut term = amp;
        let mut stop = TermCut::new(ctl.term_tol, floor);
        let mut k: i64 = 0;
        loop {
            let target = match factor {
                Factor::Absorb { .. } => pos - k,
                _ => pos + k,
            };
            let slot = (target - base) as usize;
            if slot >= acc.len() {
                acc.resize(slot + 1, Complex64::new(0.0, 0.0));
            }
            acc[slot] += term;
            if stop.done(term.norm()) {
                break;
            }
            k += 1;
            if k as usize > limit {
                return Err(Error::SeriesNotConverged {
                    series: "factor expansion",
                    max_index: limit,
                });
            }
            let step = match factor {
                Factor::Emit { .. } => ((pos + k) as f64).sqrt() / k as f64,
                Factor::Absorb { .. } => {
                    if k > pos {
                        break;
                    }
                    ((pos - k + 1) as f64).sqrt() / k as f64
                }
                Factor::Exchange { .. } => 1.0 / k as f64,
            };
            term *= coeff * step;
        }
    }
    let mut entries = Vec::new();
    let mut spill = NeumaierSum::new();
    for (i, v) in acc.into_iter().enumerate() {
        if v.norm_sqr() == 0.0 {
            continue;
        }
        let label = factor.at(key, base + i as i64);
        if factor.inside(&label, cut) {
            entries.push((label, v));
        } else {
            spill.add(v.norm_sqr());
        }
    }
    Ok((entries, spill.total()))
}

/// The factors of the simultaneous operator, rightmost (applied first) first,
/// and the scalar prefactor.
pub fn factor_sequence(c: &CouplingSet, ordering: FactorOrdering) -> (Complex64, Vec<Factor>) {
    let g = c.as_slice();
    let n = g.len();
    let half = 0.5 * c.strength();
    let emit = |mu: usize| Factor::Emit {
        electron: mu,
        coeff: -g[mu].conj(),
    };
    let absorb = |mu: usize| Factor::Absorb {
        electron: mu,
        coeff: g[mu],
    };
    let exchange = |sign: f64| {
        let mut v = Vec::new();
        for mu in 0..n {
            for nu in 0..n {
                if mu != nu {
                    v.push(Factor::Exchange {
                        lower: mu,
                        raise: nu,
                        coeff: 0.5 * sign * g[mu].conj() * g[nu],
                    });
                }
            }
        }
        v
    };
    match ordering {
        FactorOrdering::Normal => {
            let mut f: Vec<Factor> = (0..n).map(absorb).collect();
            f.extend(exchange(-1.0));
            f.extend((0..n).map(emit));
            (Complex64::new((-half).exp(), 0.0), f)
        }
        FactorOrdering::Antinormal => {
            let mut f = exchange(1.0);
            f.extend((0..n).map(emit));
            f.extend((0..n).map(absorb));
            (Complex64::new(half.exp(), 0.0), f)
        }
    }
}

/// How to apply the scattering operator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScatterOptions {
    pub mode: InteractionMode,
    pub ordering: FactorOrdering,
    /// Order in which electrons interact in successive mode; index order by default.
    pub electron_order: Option<Vec<usize>>,
    pub truncation: Truncation,
    pub series: SeriesControl,
}

impl ScatterOptions {
    pub fn new(mode: InteractionMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    fn order(&self, electrons: usize) -> Result<Vec<usize>> {
        let order = self.electron_order.clone().unwrap_or_else(|| (0..electrons).collect());
        let mut seen = order.clone();
        seen.sort_unstable();
        if seen != (0..electrons).collect::<Vec<_>>() {
            return Err(Error::InvalidInput(format!(
                "electron order {order:?} is not a permutation of 0..{electrons}"
            )));
        }
        Ok(order)
    }
}

/// Applies the scattering operator to `state0`.
pub fn scatter(state0: &JointAmplitude, c: &CouplingSet, opts: &ScatterOptions) -> Result<JointAmplitude> {
    check_arity(state0, c)?;
    opts.series.validate()?;
    let cut = opts.truncation.resolve(c, state0.max_photons())?;
    let start = state0.clone().with_cutoffs(&cut);
    let input = start.norm_sqr();
    let mut out = match opts.mode {
        InteractionMode::Simultaneous => simultaneous(&start, c, opts, &cut)?,
        InteractionMode::Successive => {
            let mut s = start.clone();
            for mu in opts.order(c.len())? {
                s = single_electron_step(&s, mu, c.get(mu), &opts.series, &cut)?;
            }
            s
        }
    };
    finish(&mut out, &start, input, &cut)?;
    Ok(out)
}

/// Successive interaction with a projective energy measurement of each
/// electron right after it interacts.
///
/// Returns the unnormalized branches, one per measured outcome sequence; their
/// squared norms sum to the total probability.
pub fn scatter_measured(
    state0: &JointAmplitude,
    c: &CouplingSet,
    opts: &ScatterOptions,
) -> Result<Vec<JointAmplitude>> {
    check_arity(state0, c)?;
    opts.series.validate()?;
    let cut = opts.truncation.resolve(c, state0.max_photons())?;
    let start = state0.clone().with_cutoffs(&cut);
    let input = start.norm_sqr();
    let mut branches = vec![start.clone()];
    for mu in opts.order(c.len())? {
        let mut next = Vec::new();
        for b in &branches {
            let s = single_electron_step(b, mu, c.get(mu), &opts.series, &cut)?;
            let mut split: BTreeMap<i32, JointAmplitude> = BTreeMap::new();
            for (label, amp) in s.source_order() {
                split
                    .entry(label.j[mu])
                    .or_insert_with(|| {
                        let mut e = s.empty_like();
                        e.dropped_mass = 0.0;
                        e
                    })
                    .entries
                    .insert(label, amp);
            }
            next.extend(split.into_values());
        }
        branches = next;
    }
    let total: f64 = branches.iter().map(|b| b.norm_sqr()).sum();
    let dropped = start.dropped_mass + (input - total).max(0.0);
    if dropped > cut.dropped_budget {
        return Err(Error::CutoffBudgetExceeded {
            dropped,
            budget: cut.dropped_budget,
        });
    }
    for b in &mut branches {
        b.dropped_mass = dropped;
    }
    Ok(branches)
}

fn check_arity(state0: &JointAmplitude, c: &CouplingSet) -> Result<()> {
    if c.len() != state0.electrons {
        return Err(Error::InvalidInput(format!(
            "{} couplings for a {}-electron state",
            c.len(),
            state0.electrons
        )));
    }
    Ok(())
}

fn finish(out: &mut JointAmplitude, start: &JointAmplitude, input: f64, cut: &Cutoffs) -> Result<()> {
    out.prune(cut.prune_tol);
    let deficit = input - out.norm_sqr();
    out.dropped_mass = start.dropped_mass + deficit.max(0.0);
    if deficit.abs() > cut.dropped_budget || out.dropped_mass > cut.dropped_budget {
        return Err(Error::CutoffBudgetExceeded {
            dropped: deficit.abs().max(out.dropped_mass),
            budget: cut.dropped_budget,
        });
    }
    Ok(())
}

fn simultaneous(
    start: &JointAmplitude,
    c: &CouplingSet,
    opts: &ScatterOptions,
    cut: &Cutoffs,
) -> Result<JointAmplitude> {
    let (scale, factors) = factor_sequence(c, opts.ordering);
    // The antinormal product overshoots the photon cutoff before absorbing back.
    let inner = match opts.ordering {
        FactorOrdering::Normal => *cut,
        FactorOrdering::Antinormal => Cutoffs {
            n_cutoff: cut.n_cutoff + 20 + (8.0 * c.strength()).ceil() as u32,
            dropped_budget: f64::INFINITY,
            prune_tol: 0.0,
            ..*cut
        },
    };
    let mut s = start.clone();
    s.dropped_mass = 0.0;
    let spill_budget = Cutoffs {
        dropped_budget: f64::INFINITY,
        ..inner
    };
    for f in &factors {
        s = apply_exponential(&s, f, &opts.series, &spill_budget)?;
    }
    let mut out = s.empty_like();
    for (label, amp) in s.source_order() {
        if label.n <= cut.n_cutoff {
            out.entries.insert(label, amp * scale);
        }
    }
    Ok(out)
}

/// Single-electron column `S(n → n_f)` for every `n_f` that carries weight.
///
/// For a fixed conserved excitation one electron and the photon form a chain
/// in `n`; the column is the exponential of that tridiagonal generator applied
/// to `|n⟩`. Exact arithmetic sums the closed-form element instead.
fn single_electron_column(g: Complex64, n: u32, ctl: &SeriesControl, n_cutoff: u32) -> Result<Vec<(u32, Complex64)>> {
    if ctl.arithmetic == Arithmetic::ExactRational {
        return closed_form_column(g, n, ctl, n_cutoff);
    }
    let reach = 2.0 * g.norm() * ((n + 1) as f64).sqrt() + g.norm_sqr();
    let mut span = 2 * reach.ceil() as u32 + 30;
    loop {
        let top = (n + span) as usize;
        let cols = (0..=top)
            .map(|m| {
                let mut c = Vec::with_capacity(2);
                if m > 0 {
                    c.push((m - 1, g * (m as f64).sqrt()));
                }
                if m < top {
                    c.push((m + 1, -g.conj() * ((m + 1) as f64).sqrt()));
                }
                c
            })
            .collect();
        let mut v = vec![Complex64::new(0.0, 0.0); top + 1];
        v[n as usize] = Complex64::new(1.0, 0.0);
        let v = expm_action(&SparseColumns { cols }, &v, 1e-17);
        let edge: f64 = v[top - 4..].iter().map(|z| z.norm_sqr()).sum();
        if edge < 1e-34 {
            return Ok(v
                .into_iter()
                .enumerate()
                .filter(|(_, z)| z.norm_sqr() > 0.0)
                .map(|(m, z)| (m as u32, z))
                .collect());
        }
        span *= 2;
    }
}

fn closed_form_column(g: Complex64, n: u32, ctl: &SeriesControl, n_cutoff: u32) -> Result<Vec<(u32, Complex64)>> {
    let mut col = Vec::new();
    let mut peak: f64 = 0.0;
    let mut quiet = 0;
    // Probability peaks near n + |G|²; scan upward and stop in the far tail.
    for n_f in 0..=n_cutoff + 64 {
        let s = element_single_electron(g, n, n_f, ctl)?;
        let p = s.norm_sqr();
        peak = peak.max(p);
        col.push((n_f, s));
        if n_f > n && p < 1e-34 * peak.max(1e-300) + 1e-40 {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(col)
}

fn single_electron_step(
    state: &JointAmplitude,
    mu: usize,
    g: Complex64,
    ctl: &SeriesControl,
    cut: &Cutoffs,
) -> Result<JointAmplitude> {
    if g.norm_sqr() == 0.0 {
        return Ok(state.clone());
    }
    let mut columns: FxHashMap<u32, Vec<(u32, Complex64)>> = FxHashMap::default();
    let mut out = state.empty_like();
    let mut spill = NeumaierSum::new();
    for (label, amp) in state.source_order() {
        if !columns.contains_key(&label.n) {
            columns.insert(label.n, single_electron_column(g, label.n, ctl, cut.n_cutoff)?);
        }
        for &(n_f, s) in &columns[&label.n] {
            let mut target = label;
            target.n = n_f;
            target.j[mu] += label.n as i32 - n_f as i32;
            let v = amp * s;
            if n_f <= cut.n_cutoff && cut.contains(target.j[mu]) {
                *out.entries.entry(target).or_default() += v;
            } else {
                spill.add(v.norm_sqr());
            }
        }
    }
    out.dropped_mass += spill.total();
    out.prune(cut.prune_tol);
    Ok(out)
}

#[cfg(test)]
mod tests;
