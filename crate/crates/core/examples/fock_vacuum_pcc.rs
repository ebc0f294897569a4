//! Two electrons on an empty cavity: simultaneous scattering correlates their
//! energy gains, one-after-another scattering does not.

use qewsim::runner::{simulate, ScenarioConfig};

fn scenario(mode: &str) -> String {
    format!(
        r#"
name = "vacuum-{mode}"
mode = "{mode}"
photon = {{ kind = "fock", n_i = 0 }}
electrons = [{{ magnitude = 2.0 }}, {{ magnitude = 2.0 }}]
"#
    )
}

fn main() -> qewsim::Result<()> {
    for mode in ["simultaneous", "successive"] {
        let cfg = ScenarioConfig::from_toml_str(&scenario(mode))?;
        let sim = simulate(&cfg)?;
        let r = sim.pcc("e1", "e2")?;
        println!(
            "{mode:>12}: path {:?}, PCC {:+.3e}, means {:?}",
            sim.path,
            r.value.unwrap_or(f64::NAN),
            r.means
        );
    }
    Ok(())
}
