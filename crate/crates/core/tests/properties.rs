use num_complex::Complex64;
use proptest::prelude::*;

use qewsim::classical::{classical_distribution, ClassicalCoupling};
use qewsim::evolution::{scatter, InteractionMode, JointAmplitude, ScatterOptions};
use qewsim::smatrix::CouplingSet;
use qewsim::states::make_fock;
use qewsim::stats::export::{from_csv, from_json, to_csv, to_json};
use qewsim::stats::{marginalize, pcc, post_select, JointDistribution};

fn table() -> impl Strategy<Value = JointDistribution> {
    prop::collection::vec(((-3i32..=3, -3i32..=3, -2i32..=2), 0.0f64..1.0), 1..40).prop_filter_map(
        "needs mass",
        |entries| {
            let d = JointDistribution::from_entries(
                vec!["a".into(), "b".into(), "c".into()],
                entries.into_iter().map(|((a, b, c), p)| (vec![a, b, c], p)),
            )
            .ok()?;
            (d.total_mass() > 1e-6).then(|| d.normalized().unwrap())
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pcc_is_bounded_and_symmetric(d in table()) {
        let ab = pcc(&d, "a", "b").unwrap();
        let ba = pcc(&d, "b", "a").unwrap();
        prop_assert_eq!(ab.value.is_some(), ba.value.is_some());
        if let (Some(x), Some(y)) = (ab.value, ba.value) {
            prop_assert!((-1.0..=1.0).contains(&x));
            prop_assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn conditioning_commutes_with_marginalizing(d in table(), c in -2i32..=2) {
        let Ok(lhs) = post_select(&d, &[("c", c)]).and_then(|x| marginalize(&x, &["a"])) else {
            return Ok(());
        };
        let rhs = post_select(&marginalize(&d, &["a", "c"]).unwrap(), &[("c", c)]).unwrap();
        prop_assert!((lhs.selection_probability() - rhs.selection_probability()).abs() < 1e-12);
        for (k, p) in lhs.iter() {
            prop_assert!((p - rhs.get(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn marginals_keep_the_mass(d in table()) {
        let m = marginalize(&d, &["b"]).unwrap();
        prop_assert!((m.total_mass() - d.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn exports_round_trip(d in table()) {
        let csv = from_csv(&to_csv(&d)).unwrap();
        for (k, p) in d.iter() {
            prop_assert!((p - csv.get(k)).abs() <= 1e-11 * p.abs());
        }
        prop_assert_eq!(from_json(&to_json(&d, Default::default()).unwrap()).unwrap(), d);
    }

    #[test]
    fn scattering_conserves_energy_and_norm(
        g in prop::collection::vec((0.0f64..1.2, -3.2f64..3.2), 1..=3),
        n_i in 0u32..4,
        successive in any::<bool>(),
    ) {
        let c = CouplingSet::new(g.iter().map(|&(r, phi)| Complex64::from_polar(r, phi)).collect()).unwrap();
        let start = JointAmplitude::from_photon(&make_fock(n_i), c.len(), n_i, (0, 0)).unwrap();
        let mode = if successive { InteractionMode::Successive } else { InteractionMode::Simultaneous };
        let out = scatter(&start, &c, &ScatterOptions::new(mode)).unwrap();
        prop_assert!(out.iter().all(|(l, _)| l.excitation() == n_i as i64));
        prop_assert!((out.norm_sqr() + out.dropped_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classical_products_are_normalized_and_uncorrelated(g1 in 0.1f64..5.0, g2 in 0.1f64..5.0, phi in -3.0f64..3.0) {
        let field = ClassicalCoupling::new(vec![Complex64::new(g1, 0.0), Complex64::from_polar(g2, phi)]).unwrap();
        let d = classical_distribution(&field, 1e-20).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(pcc(&d, "e1", "e2").unwrap().value.unwrap().abs() < 1e-10);
    }
}
