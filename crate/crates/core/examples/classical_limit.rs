//! Approach to the classical limit: hold `|G|·√n̄ = 1` and let `n̄` grow.

use qewsim::classical::{classical_limit_distance, ClassicalCoupling};
use qewsim::runner::{simulate, ScenarioConfig};

fn main() -> qewsim::Result<()> {
    for n_avg in [4.0_f64, 16.0, 64.0, 256.0] {
        let g = 1.0 / n_avg.sqrt();
        let cfg = ScenarioConfig::from_toml_str(&format!(
            "name = \"limit\"\nphoton = {{ kind = \"coherent\", n_avg = {n_avg:?} }}\n\
             electrons = [{{ magnitude = {g:?} }}, {{ magnitude = {g:?} }}]\n"
        ))?;
        let sim = simulate(&cfg)?;
        let field = ClassicalCoupling::from_quantum(&cfg.couplings()?, n_avg)?;
        let tv = classical_limit_distance(&sim.joint, &field)?;
        let r = sim.pcc("e1", "e2")?.value.unwrap();
        println!("n_avg = {n_avg:>5}: G = {g:.5}, TV = {tv:.6e}, PCC = {r:+.3e}");
    }
    Ok(())
}
