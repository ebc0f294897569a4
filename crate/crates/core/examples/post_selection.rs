//! Three electrons on vacuum: condition on the first electron's gain and look at
//! the correlation left between the other two.

use qewsim::runner::{simulate, ScenarioConfig};

fn main() -> qewsim::Result<()> {
    for gain in [0, 2, 6] {
        let cfg = ScenarioConfig::from_toml_str(&format!(
            "name = \"post\"\nphoton = {{ kind = \"fock\", n_i = 0 }}\n\
             electrons = [{{ magnitude = 1.0 }}, {{ magnitude = 1.0 }}, {{ magnitude = 1.0 }}]\n\
             post_select = {{ e1 = {gain} }}\n"
        ))?;
        let sim = simulate(&cfg)?;
        let d = &sim.conditioned;
        println!(
            "e1 = {gain:+}: P(select) = {:.4e}, axes {:?}, PCC(e2, e3) = {:+.4}, e2 range {:?}",
            d.selection_probability(),
            d.axes(),
            sim.pcc("e2", "e3")?.value.unwrap_or(f64::NAN),
            d.range("e2")?
        );
    }
    Ok(())
}
