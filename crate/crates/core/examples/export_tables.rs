//! Write a joint table as CSV and JSON and read both back.

use std::collections::BTreeMap;

use qewsim::runner::{simulate, ScenarioConfig};
use qewsim::stats::export::{from_csv, from_json, to_csv, to_json};
use qewsim::stats::marginalize;

fn main() -> qewsim::Result<()> {
    let cfg = ScenarioConfig::from_toml_str(
        "name = \"export\"\nphoton = { kind = \"fock\", n_i = 1 }\n\
         electrons = [{ magnitude = 0.7 }, { magnitude = 0.7 }]\n",
    )?;
    let joint = simulate(&cfg)?.joint;

    let csv = to_csv(&marginalize(&joint, &["e1"])?);
    print!("{csv}");
    let back = from_csv(&csv)?;
    println!("csv rows {}, mass {:.12}", back.len(), back.total_mass());

    let mut meta = BTreeMap::new();
    meta.insert("scenario".to_string(), serde_json::json!(cfg.name));
    let json = to_json(&joint, meta)?;
    let again = from_json(&json)?;
    println!("json {} bytes, lossless {}", json.len(), again == joint);
    Ok(())
}
