//! Run a scenario file end to end and list the files it writes.
//!
//! `cargo run --example run_scenario -- figures/fig1d.toml`

use std::path::PathBuf;

use qewsim::runner::{run_scenario, ScenarioConfig};

fn main() -> qewsim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../figures/fig1d.toml")));
    let cfg = ScenarioConfig::load(&path)?;
    let dir = std::env::temp_dir().join(format!("qewsim-{}", cfg.name));
    let report = run_scenario(&cfg, &dir)?;
    println!("{} -> {}", cfg.name, dir.display());
    for f in &report.manifest.outputs {
        println!("  {:<20} {}", f.file, &f.sha256[..16]);
    }
    println!("{}", serde_json::to_string_pretty(&report.summary["pcc"]).unwrap());
    Ok(())
}
