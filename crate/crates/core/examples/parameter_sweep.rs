//! A small coupling by photon-number grid in both interaction modes.

use qewsim::runner::{rows_to_csv, sweep_rows, ScenarioConfig};

const SCENARIO: &str = r#"
name = "grid"
photon = { kind = "fock", n_i = 0 }
electrons = [{ magnitude = 1.0 }, { magnitude = 1.0 }]
outputs = [{ kind = "pcc" }]

[sweep]
g = [0.5, 1.0, 2.0]
n = [0, 2, 5]
"#;

fn main() -> qewsim::Result<()> {
    let rows = sweep_rows(&ScenarioConfig::from_toml_str(SCENARIO)?)?;
    print!("{}", rows_to_csv(&rows));
    Ok(())
}
