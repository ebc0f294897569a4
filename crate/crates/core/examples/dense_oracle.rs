//! Compare the series kernel with the exponential of the truncated generator.

use qewsim::evolution::{dense_oracle, InteractionMode, Label};
use qewsim::runner::{oracle_check, ScenarioConfig};
use qewsim::smatrix::{element_two_electron, CouplingSet, SeriesControl, TransitionLabel};

fn main() -> qewsim::Result<()> {
    let c = CouplingSet::real(&[1.0, 0.5])?;
    let oracle = dense_oracle(&c, 40, (-16, 16), InteractionMode::Simultaneous)?;
    let mut worst: f64 = 0.0;
    for (l, p) in oracle.column(&Label::photons(3))? {
        if let Some(t) = TransitionLabel::from_gains(3, l.j[0], l.j[1]) {
            let s = element_two_electron(&c, &t, &SeriesControl::default())?;
            worst = worst.max((s.norm_sqr() - p).abs());
        }
    }
    println!("max |kernel - oracle| on the n_i = 3 column: {worst:.2e}");

    let cfg = ScenarioConfig::from_toml_str(
        "name = \"check\"\nphoton = { kind = \"fock\", n_i = 2 }\n\
         electrons = [{ magnitude = 1.0 }, { magnitude = 1.0 }]\n",
    )?;
    let report = oracle_check(&cfg)?;
    println!(
        "oracle-check: {} labels, max deviation {:.2e}, passed {}",
        report.compared, report.max_deviation, report.passed
    );
    Ok(())
}
