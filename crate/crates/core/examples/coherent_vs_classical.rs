//! Coherent-state input against the classical-field Bessel product with the same
//! effective coupling `G·√n̄`.

use qewsim::classical::{classical_distribution, classical_limit_distance, ClassicalCoupling, DEFAULT_TAIL_TOL};
use qewsim::runner::{simulate, ScenarioConfig};
use qewsim::stats::pcc;

const SCENARIO: &str = r#"
name = "coherent"
photon = { kind = "coherent", n_avg = 9.0 }
electrons = [{ magnitude = 1.5 }, { magnitude = 1.5 }]
"#;

fn main() -> qewsim::Result<()> {
    let cfg = ScenarioConfig::from_toml_str(SCENARIO)?;
    let sim = simulate(&cfg)?;
    let field = ClassicalCoupling::from_quantum(&cfg.couplings()?, 9.0)?;
    let classical = classical_distribution(&field, DEFAULT_TAIL_TOL)?;

    println!("quantum PCC   {:+.5}", sim.pcc("e1", "e2")?.value.unwrap());
    println!("classical PCC {:+.1e}", pcc(&classical, "e1", "e2")?.value.unwrap());
    println!("total variation {:.4}", classical_limit_distance(&sim.joint, &field)?);
    Ok(())
}
