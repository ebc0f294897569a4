//! Thermal input is an incoherent mixture of Fock components; compare the three
//! photon-state families at the same mean photon number.

use qewsim::runner::{simulate, ScenarioConfig};

fn main() -> qewsim::Result<()> {
    for kind in ["fock", "coherent", "thermal"] {
        let photon = if kind == "fock" {
            "{ kind = \"fock\", n_i = 2 }".to_string()
        } else {
            format!("{{ kind = \"{kind}\", n_avg = 2.0 }}")
        };
        for mode in ["simultaneous", "successive"] {
            let cfg = ScenarioConfig::from_toml_str(&format!(
                "name = \"mix\"\nmode = \"{mode}\"\nphoton = {photon}\n\
                 electrons = [{{ magnitude = 1.0 }}, {{ magnitude = 1.0 }}]\n"
            ))?;
            let sim = simulate(&cfg)?;
            println!(
                "{kind:>8} {mode:>12}: components {:3}, PCC {:+.4e}, dropped {:.1e}",
                sim.truncation.components,
                sim.pcc("e1", "e2")?.value.unwrap(),
                sim.truncation.dropped_mass
            );
        }
    }
    Ok(())
}
