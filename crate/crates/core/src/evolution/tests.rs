use super::*;
use crate::smatrix::{element_two_electron, TransitionLabel};
use crate::states::{make_coherent, make_fock};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn vacuum(electrons: usize) -> JointAmplitude {
    JointAmplitude::from_photon(&make_fock(0), electrons, 0, (0, 0)).unwrap()
}

fn fock(n: u32, electrons: usize) -> JointAmplitude {
    JointAmplitude::from_photon(&make_fock(n), electrons, n, (0, 0)).unwrap()
}

fn wide() -> Cutoffs {
    Cutoffs {
        n_cutoff: 60,
        j_window: (-60, 60),
        dropped_budget: 1e-6,
        prune_tol: 0.0,
    }
}

fn probabilities(s: &JointAmplitude) -> BTreeMap<Label, f64> {
    s.sorted().into_iter().map(|(l, a)| (l, a.norm_sqr())).collect()
}

#[test]
fn zero_coefficient_is_identity() {
    let s = fock(3, 2);
    for f in [
        Factor::Emit {
            electron: 0,
            coeff: c64(0.0, 0.0),
        },
        Factor::Absorb {
            electron: 1,
            coeff: c64(0.0, 0.0),
        },
        Factor::Exchange {
            lower: 0,
            raise: 1,
            coeff: c64(0.0, 0.0),
        },
    ] {
        let out = apply_exponential(&s, &f, &SeriesControl::default(), &wide()).unwrap();
        assert_eq!(out.sorted(), s.sorted());
    }
}

#[test]
fn emission_from_vacuum() {
    let s = vacuum(1);
    let f = Factor::Emit {
        electron: 0,
        coeff: c64(1.0, 0.0),
    };
    let out = apply_exponential(&s, &f, &SeriesControl::default(), &wide()).unwrap();
    let mut fact = 1.0f64;
    for m in 0..15u32 {
        if m > 0 {
            fact *= m as f64;
        }
        let a = out.get(&Label::new(m, &[-(m as i32)]));
        assert!((a.re - 1.0 / fact.sqrt()).abs() < 1e-15, "m = {m}");
    }
}

#[test]
fn absorption_is_a_finite_sum() {
    let s = fock(4, 1);
    let f = Factor::Absorb {
        electron: 0,
        coeff: c64(1.0, 0.0),
    };
    let out = apply_exponential(&s, &f, &SeriesControl::default(), &wide()).unwrap();
    assert_eq!(out.len(), 5);
    // k = 2: √(4·3) / 2!
    assert!((out.get(&Label::new(2, &[2])).re - 12f64.sqrt() / 2.0).abs() < 1e-15);
}

#[test]
fn disjoint_exchanges_commute() {
    let mut s = JointAmplitude::new(4, 10, (-20, 20)).unwrap();
    s.insert(Label::new(3, &[0, 1, -1, 0]), c64(0.6, 0.0));
    s.insert(Label::new(2, &[1, 0, 0, 1]), c64(0.0, 0.8));
    let ctl = SeriesControl::default();
    let cut = Cutoffs {
        j_window: (-20, 20),
        ..wide()
    };
    let f1 = Factor::Exchange {
        lower: 0,
        raise: 1,
        coeff: c64(-0.5, 0.2),
    };
    let f2 = Factor::Exchange {
        lower: 3,
        raise: 2,
        coeff: c64(0.3, 0.0),
    };
    let a = apply_exponential(&apply_exponential(&s, &f1, &ctl, &cut).unwrap(), &f2, &ctl, &cut).unwrap();
    let b = apply_exponential(&apply_exponential(&s, &f2, &ctl, &cut).unwrap(), &f1, &ctl, &cut).unwrap();
    assert_eq!(a.len(), b.len());
    for (l, v) in a.sorted() {
        assert!((v - b.get(&l)).norm() < 1e-15);
    }
}

#[test]
fn simultaneous_matches_closed_form() {
    let c = CouplingSet::real(&[2.0, 2.0]).unwrap();
    let out = scatter(&vacuum(2), &c, &ScatterOptions::default()).unwrap();
    let ctl = SeriesControl::default();
    for (l, a) in out.sorted() {
        let t = TransitionLabel::new(0, l.n, l.j[0], l.j[1]);
        let s = element_two_electron(&c, &t, &ctl).unwrap();
        assert!((s.norm_sqr() - a.norm_sqr()).abs() < 1e-8, "{l:?}");
    }
    assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
}

#[test]
fn orderings_agree() {
    let c = CouplingSet::new(vec![c64(0.6, 0.2), c64(0.5, 0.0)]).unwrap();
    let start = fock(2, 2);
    let normal = scatter(&start, &c, &ScatterOptions::default()).unwrap();
    let opts = ScatterOptions {
        ordering: FactorOrdering::Antinormal,
        ..ScatterOptions::default()
    };
    let anti = scatter(&start, &c, &opts).unwrap();
    for (l, a) in normal.sorted() {
        assert!((a - anti.get(&l)).norm() < 1e-9, "{l:?}");
    }
}

#[test]
fn single_electron_run_matches_successive_path() {
    let c = CouplingSet::real(&[1.0]).unwrap();
    let a = scatter(&vacuum(1), &c, &ScatterOptions::default()).unwrap();
    let b = scatter(&vacuum(1), &c, &ScatterOptions::new(InteractionMode::Successive)).unwrap();
    for (l, v) in b.sorted() {
        assert!((v - a.get(&l)).norm() < 1e-12);
        // Vacuum displacement: Poisson(1) photon statistics.
        let expected = (-1.0f64).exp() / (1..=l.n).map(|k| k as f64).product::<f64>();
        assert!((v.norm_sqr() - expected).abs() < 1e-14);
    }
}

#[test]
fn first_successive_electron_cannot_gain_from_vacuum() {
    let c = CouplingSet::real(&[2.0, 2.0]).unwrap();
    let out = scatter(&vacuum(2), &c, &ScatterOptions::new(InteractionMode::Successive)).unwrap();
    assert!(out.iter().all(|(l, _)| l.j[0] <= 0));
    assert!(out.iter().any(|(l, _)| l.j[1] > 0));
}

#[test]
fn matches_dense_oracle_for_three_electrons() {
    let c = CouplingSet::new(vec![c64(1.0, 0.0), c64(0.4, 0.5), c64(0.5, 0.0)]).unwrap();
    let start = fock(2, 3);
    let oracle = dense_oracle(&c, 34, (-14, 14), InteractionMode::Simultaneous).unwrap();
    let reference = oracle.propagate(&start).unwrap();
    // Stay clear of the oracle's own truncation edges.
    let interior = |l: &Label| l.n <= 26 && l.j.iter().all(|v| v.abs() <= 10);
    for mode in [InteractionMode::Simultaneous] {
        let out = scatter(&start, &c, &ScatterOptions::new(mode)).unwrap();
        let mut worst: f64 = 0.0;
        for (l, p) in probabilities(&reference).into_iter().filter(|(l, _)| interior(l)) {
            worst = worst.max((p - out.get(&l).norm_sqr()).abs());
        }
        assert!(worst < 1e-8, "max deviation {worst:e}");
    }
    let succ = dense_oracle(&c, 34, (-14, 14), InteractionMode::Successive).unwrap();
    let reference = succ.propagate(&start).unwrap();
    let out = scatter(&start, &c, &ScatterOptions::new(InteractionMode::Successive)).unwrap();
    for (l, a) in reference.sorted().into_iter().filter(|(l, _)| interior(l)) {
        assert!((a - out.get(&l)).norm() < 1e-8, "{l:?}: {a} vs {}", out.get(&l));
    }
}

#[test]
fn energy_is_conserved() {
    let c = CouplingSet::real(&[1.0, 1.0, 1.0, 1.0]).unwrap();
    let out = scatter(&fock(1, 4), &c, &ScatterOptions::default()).unwrap();
    assert!(out.iter().all(|(l, _)| l.excitation() == 1));
    assert!((out.norm_sqr() + out.dropped_mass() - 1.0).abs() < 1e-9);
}

#[test]
fn equal_couplings_are_permutation_symmetric() {
    let c = CouplingSet::real(&[1.0, 1.0, 1.0]).unwrap();
    let out = scatter(&vacuum(3), &c, &ScatterOptions::default()).unwrap();
    for (l, a) in out.sorted() {
        let mut swapped = l;
        swapped.j.swap(0, 2);
        let mut rotated = l;
        rotated.j[..3].rotate_left(1);
        for other in [swapped, rotated] {
            assert!((a.norm_sqr() - out.get(&other).norm_sqr()).abs() < 1e-13);
        }
    }
}

#[test]
fn measurement_between_interactions_keeps_energy_table() {
    let c = CouplingSet::real(&[1.5, 1.0]).unwrap();
    let start = fock(3, 2);
    let opts = ScatterOptions::new(InteractionMode::Successive);
    let coherent = scatter(&start, &c, &opts).unwrap();
    let branches = scatter_measured(&start, &c, &opts).unwrap();
    let mut table: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    for b in &branches {
        for (l, a) in b.iter() {
            *table.entry((l.j[0], l.j[1])).or_default() += a.norm_sqr();
        }
    }
    let mut reference: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    for (l, a) in coherent.iter() {
        *reference.entry((l.j[0], l.j[1])).or_default() += a.norm_sqr();
    }
    for (k, p) in &reference {
        assert!((p - table.get(k).copied().unwrap_or(0.0)).abs() < 1e-12);
    }
}

#[test]
fn coherent_input_keeps_norm() {
    let photon = make_coherent(4.0, None, 1e-12).unwrap();
    let start = JointAmplitude::from_photon(&photon, 2, photon.n_cutoff(), (0, 0)).unwrap();
    let c = CouplingSet::real(&[0.5, 0.5]).unwrap();
    let out = scatter(&start, &c, &ScatterOptions::default()).unwrap();
    assert!((out.norm_sqr() + out.dropped_mass() - 1.0).abs() < 1e-9);
}

#[test]
fn tiny_cutoffs_exceed_budget() {
    let c = CouplingSet::real(&[2.0, 2.0]).unwrap();
    let opts = ScatterOptions {
        truncation: Truncation {
            n_cutoff: Some(3),
            j_window: Some((-3, 3)),
            ..Truncation::default()
        },
        ..ScatterOptions::default()
    };
    let err = scatter(&vacuum(2), &c, &opts).unwrap_err();
    assert!(matches!(err, Error::CutoffBudgetExceeded { .. }));
}

#[test]
fn rejects_mismatched_couplings() {
    let c = CouplingSet::real(&[1.0]).unwrap();
    assert!(scatter(&vacuum(2), &c, &ScatterOptions::default()).is_err());
    let opts = ScatterOptions {
        mode: InteractionMode::Successive,
        electron_order: Some(vec![0, 0]),
        ..ScatterOptions::default()
    };
    let c2 = CouplingSet::real(&[1.0, 1.0]).unwrap();
    assert!(scatter(&vacuum(2), &c2, &opts).is_err());
}
