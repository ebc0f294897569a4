//! Propagation by the exponential of the generator on each conserved block.
//!
//! Slower than the factorized paths but free of their cancellation at large
//! `|G|√n`. The electron window grows until the probability near its edge is
//! below the requested tolerance.

use super::oracle::DenseOracle;
use super::{InteractionMode, JointAmplitude};
use crate::error::{Error, Result};
use crate::smatrix::CouplingSet;

const EDGE_BAND: i32 = 3;
const ATTEMPTS: usize = 4;

/// Initial half-width of the electron window for states holding up to
/// `n_max` photons.
pub fn initial_window(c: &CouplingSet, n_max: u32) -> i32 {
    (2.0 * c.magnitude_sum() * ((n_max + 1) as f64).sqrt()).ceil() as i32 + 8
}

/// Probability on labels within `EDGE_BAND` of the electron window edge.
fn edge_mass(s: &JointAmplitude, w: i32) -> f64 {
    s.sorted()
        .iter()
        .filter(|(l, _)| l.j[..s.electrons()].iter().any(|j| j.abs() > w - EDGE_BAND))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

pub fn scatter_blocks(
    state0: &JointAmplitude,
    c: &CouplingSet,
    mode: InteractionMode,
    edge_tol: f64,
    dim_limit: usize,
) -> Result<JointAmplitude> {
    if c.len() != state0.electrons() {
        return Err(Error::InvalidInput(format!(
            "{} couplings for a {}-electron state",
            c.len(),
            state0.electrons()
        )));
    }
    let n0 = state0.max_photons();
    let mut w = initial_window(c, n0);
    let mut last = 0.0;
    for _ in 0..ATTEMPTS {
        let n_max = n0 + c.len() as u32 * w as u32;
        let oracle = DenseOracle::new(c, n_max, (-w, w), mode)?.with_dim_limit(dim_limit);
        let mut start = JointAmplitude::new(c.len(), n_max, (-w, w))?;
        for (l, a) in state0.sorted() {
            start.insert(l, a);
        }
        let mut out = oracle.propagate(&start)?;
        last = edge_mass(&out, w);
        if last <= edge_tol {
            out.dropped_mass = state0.dropped_mass() + last;
            return Ok(out);
        }
        w += w / 2;
    }
    Err(Error::CutoffBudgetExceeded {
        dropped: last,
        budget: edge_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{scatter, Label, ScatterOptions};
    use crate::states::make_fock;

    #[test]
    fn matches_factorized_path_where_both_work() {
        let c = CouplingSet::real(&[1.0, 0.7]).unwrap();
        let start = JointAmplitude::from_photon(&make_fock(4), 2, 4, (0, 0)).unwrap();
        for mode in [InteractionMode::Simultaneous, InteractionMode::Successive] {
            let a = scatter_blocks(&start, &c, mode, 1e-14, 100_000).unwrap();
            let b = scatter(&start, &c, &ScatterOptions::new(mode)).unwrap();
            for (l, p) in b.sorted() {
                assert!((a.get(&l).norm_sqr() - p.norm_sqr()).abs() < 1e-11, "{l:?}");
            }
        }
    }

    #[test]
    fn stays_unitary_at_large_photon_number() {
        let c = CouplingSet::real(&[1.5, 1.5]).unwrap();
        let start = JointAmplitude::from_photon(&make_fock(60), 2, 60, (0, 0)).unwrap();
        let out = scatter_blocks(&start, &c, InteractionMode::Simultaneous, 1e-12, 100_000).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(out.iter().all(|(l, _)| l.excitation() == 60));
        // Equal couplings: symmetric under exchanging the electrons.
        let p = out.get(&Label::new(61, &[2, -3])).norm_sqr();
        assert!((p - out.get(&Label::new(61, &[-3, 2])).norm_sqr()).abs() < 1e-14);
    }
}
