//! Individual S-matrix elements and a full output column of the two-electron kernel.

use num_complex::Complex64;
use qewsim::smatrix::{element_single_electron, element_two_electron, CouplingSet, SeriesControl, TransitionLabel};

fn main() -> qewsim::Result<()> {
    let ctl = SeriesControl::default();
    let g = Complex64::new(1.0, 0.0);

    println!("single electron, n_i = 3, G = 1");
    for n_f in 0..8 {
        let s = element_single_electron(g, 3, n_f, &ctl)?;
        println!("  n_f = {n_f}  |S|^2 = {:.6e}", s.norm_sqr());
    }

    let c = CouplingSet::real(&[1.0, 0.5])?;
    println!("two electrons, n_i = 2, G = (1, 0.5)");
    for (dj, dk) in [(0, 0), (1, 0), (-1, -1), (2, -1), (-3, 0)] {
        if let Some(t) = TransitionLabel::from_gains(2, dj, dk) {
            let s = element_two_electron(&c, &t, &ctl)?;
            println!("  gains ({dj:+}, {dk:+}) -> n_f = {}  S = {s:.6}", t.n_f);
        }
    }

    // An energy-violating transition vanishes identically.
    let bad = TransitionLabel::new(2, 2, 1, 0);
    println!("  violating: {}", element_two_electron(&c, &bad, &ctl)?);
    Ok(())
}
