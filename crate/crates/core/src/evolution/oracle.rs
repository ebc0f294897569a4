//! Brute-force reference: the generator `Σ_μ (G_μ b_μ† a − G_μ* b_μ a†)` as an
//! explicit matrix on a truncated basis, exponentiated directly.
//!
//! The generator conserves `n + Σ_μ j_μ`, so the basis splits into independent
//! blocks; each block is exponentiated on its own.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustc_hash::FxHashMap;

use super::expm::{expm, expm_action, SparseColumns};
use super::{InteractionMode, JointAmplitude, Label, MAX_ELECTRONS};
use crate::error::{Error, Result};
use crate::smatrix::CouplingSet;

pub const DEFAULT_DIM_LIMIT: usize = 100_000;
/// Largest block handled by the explicit matrix exponential.
pub const PADE_LIMIT: usize = 2_500;

#[derive(Clone, Debug)]
pub struct DenseOracle {
    g: Vec<Complex64>,
    n_max: u32,
    window: (i32, i32),
    mode: InteractionMode,
    dim_limit: usize,
}

/// `|⟨f|U|i⟩|²` for every pair of labels in one conserved block.
#[derive(Clone, Debug)]
pub struct TransitionBlock {
    pub basis: Vec<Label>,
    /// Indexed `[final, initial]`.
    pub probabilities: DMatrix<f64>,
}

impl TransitionBlock {
    pub fn column(&self, initial: &Label) -> Option<Vec<(Label, f64)>> {
        let c = self.basis.iter().position(|l| l == initial)?;
        Some(
            self.basis
                .iter()
                .enumerate()
                .map(|(r, l)| (*l, self.probabilities[(r, c)]))
                .collect(),
        )
    }
}

pub fn dense_oracle(c: &CouplingSet, n_max: u32, window: (i32, i32), mode: InteractionMode) -> Result<DenseOracle> {
    DenseOracle::new(c, n_max, window, mode)
}

impl DenseOracle {
    pub fn new(c: &CouplingSet, n_max: u32, window: (i32, i32), mode: InteractionMode) -> Result<Self> {
        if c.len() > MAX_ELECTRONS {
            return Err(Error::InvalidInput(format!("at most {MAX_ELECTRONS} electrons")));
        }
        if window.0 > window.1 {
            return Err(Error::InvalidInput(format!("empty electron window {window:?}")));
        }
        Ok(Self {
            g: c.as_slice().to_vec(),
            n_max,
            window,
            mode,
            dim_limit: DEFAULT_DIM_LIMIT,
        })
    }

    pub fn with_dim_limit(mut self, limit: usize) -> Self {
        self.dim_limit = limit;
        self
    }

    fn electrons(&self) -> usize {
        self.g.len()
    }

    /// Labels of the block with `n + Σ j = excitation`, in label order.
    pub fn block_basis(&self, excitation: i64) -> Result<Vec<Label>> {
        let n_el = self.electrons();
        let (lo, hi) = self.window;
        let width = (hi - lo + 1) as usize;
        if width.saturating_pow(n_el as u32 - 1) > 50 * self.dim_limit {
            return Err(Error::DimensionTooLarge {
                dim: width.saturating_pow(n_el as u32 - 1),
                limit: self.dim_limit,
            });
        }
        let mut out = Vec::new();
        let mut j = vec![lo; n_el];
        loop {
            let n = excitation - j.iter().map(|&v| v as i64).sum::<i64>();
            if n >= 0 && n <= self.n_max as i64 {
                out.push(Label::new(n as u32, &j));
                if out.len() > self.dim_limit {
                    return Err(Error::DimensionTooLarge {
                        dim: out.len(),
                        limit: self.dim_limit,
                    });
                }
            }
            let mut i = n_el;
            loop {
                if i == 0 {
                    out.sort_unstable();
                    return Ok(out);
                }
                i -= 1;
                if j[i] < hi {
                    j[i] += 1;
                    break;
                }
                j[i] = lo;
            }
        }
    }

    fn generator(&self, basis: &[Label], electrons: &[usize]) -> SparseColumns {
        let index: FxHashMap<Label, usize> = basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let cols = basis
            .iter()
            .map(|l| {
                let mut col = Vec::new();
                for &mu in electrons {
                    let g = self.g[mu];
                    if g.norm_sqr() == 0.0 {
                        continue;
                    }
                    if l.n > 0 {
                        let mut t = *l;
                        t.n -= 1;
                        t.j[mu] += 1;
                        if let Some(&r) = index.get(&t) {
                            col.push((r, g * (l.n as f64).sqrt()));
                        }
                    }
                    let mut t = *l;
                    t.n += 1;
                    t.j[mu] -= 1;
                    if let Some(&r) = index.get(&t) {
                        col.push((r, -g.conj() * ((l.n + 1) as f64).sqrt()));
                    }
                }
                col
            })
            .collect();
        SparseColumns { cols }
    }

    fn stages(&self) -> Vec<Vec<usize>> {
        match self.mode {
            InteractionMode::Simultaneous => vec![(0..self.electrons()).collect()],
            InteractionMode::Successive => (0..self.electrons()).map(|mu| vec![mu]).collect(),
        }
    }

    /// Applies the truncated evolution to every entry of `state`.
    pub fn propagate(&self, state: &JointAmplitude) -> Result<JointAmplitude> {
        if state.electrons() != self.electrons() {
            return Err(Error::InvalidInput("electron count mismatch".into()));
        }
        let mut by_block: FxHashMap<i64, Vec<(Label, Complex64)>> = FxHashMap::default();
        for (l, a) in state.sorted() {
            by_block.entry(l.excitation()).or_default().push((l, a));
        }
        let mut blocks: Vec<_> = by_block.into_iter().collect();
        blocks.sort_unstable_by_key(|(e, _)| *e);
        let mut out = JointAmplitude::new(self.electrons(), self.n_max, self.window)?;
        for (e, entries) in blocks {
            let basis = self.block_basis(e)?;
            let index: FxHashMap<Label, usize> = basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
            let mut v = vec![Complex64::new(0.0, 0.0); basis.len()];
            for (l, a) in entries {
                let i = *index
                    .get(&l)
                    .ok_or_else(|| Error::InvalidInput(format!("label {l:?} lies outside the oracle basis")))?;
                v[i] = a;
            }
            for electrons in self.stages() {
                let k = self.generator(&basis, &electrons);
                v = expm_action(&k, &v, 1e-17);
            }
            for (l, a) in basis.iter().zip(v) {
                if a.norm_sqr() > 0.0 {
                    out.insert(*l, a);
                }
            }
        }
        Ok(out)
    }

    /// Explicit `|U|²` of one block.
    pub fn block(&self, excitation: i64) -> Result<TransitionBlock> {
        let basis = self.block_basis(excitation)?;
        if basis.len() > PADE_LIMIT {
            return Err(Error::DimensionTooLarge {
                dim: basis.len(),
                limit: PADE_LIMIT,
            });
        }
        let n = basis.len();
        let mut u = DMatrix::<Complex64>::identity(n, n);
        for electrons in self.stages() {
            let k = self.generator(&basis, &electrons).to_dense();
            u = expm(&k) * u;
        }
        Ok(TransitionBlock {
            probabilities: u.map(|z| z.norm_sqr()),
            basis,
        })
    }

    /// Probabilities of every final label reached from `initial`.
    pub fn column(&self, initial: &Label) -> Result<Vec<(Label, f64)>> {
        let basis = self.block_basis(initial.excitation())?;
        if basis.len() <= PADE_LIMIT {
            let block = self.block(initial.excitation())?;
            return block
                .column(initial)
                .ok_or_else(|| Error::InvalidInput(format!("label {initial:?} lies outside the oracle basis")));
        }
        let mut s = JointAmplitude::new(self.electrons(), self.n_max, self.window)?;
        s.insert(*initial, Complex64::new(1.0, 0.0));
        let out = self.propagate(&s)?;
        Ok(basis.iter().map(|l| (*l, out.get(l).norm_sqr())).collect())
    }
}
