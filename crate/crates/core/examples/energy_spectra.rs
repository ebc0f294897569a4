//! Operator evolution for any number of electrons, here four on a Fock state.

use qewsim::evolution::{scatter, InteractionMode, JointAmplitude, ScatterOptions};
use qewsim::smatrix::CouplingSet;
use qewsim::states::make_fock;
use qewsim::stats::{marginalize, to_distribution};

fn main() -> qewsim::Result<()> {
    let c = CouplingSet::real(&[0.8, 0.8, 0.8, 0.8])?;
    let start = JointAmplitude::from_photon(&make_fock(3), 4, 3, (0, 0))?;
    let out = scatter(&start, &c, &ScatterOptions::new(InteractionMode::Simultaneous))?;
    println!("{} labels, norm {:.12}", out.len(), out.norm_sqr());
    assert!(out.iter().all(|(l, _)| l.excitation() == 3));

    let e1 = marginalize(&to_distribution(&out), &["e1"])?;
    for (k, p) in e1.iter() {
        println!("  e1 gain {:+3}: {p:.6e}", k[0]);
    }
    Ok(())
}
