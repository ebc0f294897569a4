//! Shared plumbing for the acceptance target: scenario loading and the
//! one-line-per-criterion report.

use std::path::PathBuf;
use std::time::Instant;

use qewsim::runner::ScenarioConfig;

pub fn figures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../figures")
}

pub fn figure(name: &str) -> qewsim::Result<ScenarioConfig> {
    ScenarioConfig::load(figures_dir().join(format!("{name}.toml")))
}

/// Outcome of one criterion, possibly made of several sub-checks.
#[derive(Debug, Default)]
pub struct Verdict {
    checks: Vec<(bool, String)>,
}

impl Verdict {
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> &mut Self {
        self.checks.push((ok, what.into()));
        self
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|(ok, _)| *ok)
    }

    fn detail(&self) -> String {
        self.checks
            .iter()
            .map(|(ok, what)| format!("{}{what}", if *ok { "" } else { "FAILED " }))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Runs every criterion, prints `[criterion k] PASS|FAIL ...` for each and
/// returns whether all passed.
pub fn run_all(criteria: &[(u32, &str, fn() -> qewsim::Result<Verdict>)]) -> bool {
    let mut all = true;
    for (k, title, f) in criteria {
        let t = Instant::now();
        let (ok, detail) = match f() {
            Ok(v) => (v.passed(), v.detail()),
            Err(e) => (false, format!("error {}: {e}", e.kind())),
        };
        all &= ok;
        println!(
            "[criterion {k}] {} {title} ({:.1}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    all
}
