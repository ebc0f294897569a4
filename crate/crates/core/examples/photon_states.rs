//! Fock, coherent and thermal photon states at the same mean photon number.

use qewsim::states::{make_coherent, make_fock, make_thermal, DEFAULT_TRUNCATION_TOL};

fn main() -> qewsim::Result<()> {
    let states = [
        ("fock", make_fock(5)),
        ("coherent", make_coherent(5.0, None, DEFAULT_TRUNCATION_TOL)?),
        ("thermal", make_thermal(5.0, None, DEFAULT_TRUNCATION_TOL)?),
    ];
    for (name, s) in &states {
        println!(
            "{name:>8}: cutoff {:3}, mean {:.6}, variance {:.6}, truncated {:.1e}, pure {}",
            s.n_cutoff(),
            s.mean(),
            s.variance(),
            s.truncated_mass(),
            s.is_pure()
        );
    }
    let p = states[1].1.probabilities();
    println!("coherent P(n) for n < 10: {:.4?}", &p[..10]);
    Ok(())
}
