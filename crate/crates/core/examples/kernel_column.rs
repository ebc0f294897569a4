//! Every significant transition out of one Fock state, with the unitarity deficit.

use qewsim::smatrix::{CouplingSet, SeriesControl, TwoElectronKernel};

fn main() -> qewsim::Result<()> {
    let c = CouplingSet::real(&[1.0, 1.0])?;
    let kernel = TwoElectronKernel::new(&c, &SeriesControl::default())?;
    for n_i in [0, 2, 5] {
        let col = kernel.column(n_i, n_i + 40, (-30, 30), 1e-30)?;
        let top = col
            .entries
            .iter()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(t, a)| (t.n_f, t.dj, t.dk, a.norm_sqr()));
        println!(
            "n_i = {n_i}: {} entries, deficit {:+.2e}, most likely (n_f, dj, dk, p) = {top:?}",
            col.entries.len(),
            col.deficit
        );
    }
    Ok(())
}
