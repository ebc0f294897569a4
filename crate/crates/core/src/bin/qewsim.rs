use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use qewsim::runner::{oracle_check, run_scenario, run_sweep, ScenarioConfig};
use qewsim::Error;

const THREADS_ENV: &str = "QEWSIM_THREADS";

/// Joint photon-electron statistics for electrons scattering off one photon mode.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Reserved for sampling features; the current computations are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its tables, summary and manifest.
    Run {
        config: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the scenario's [sweep] grid and write sweep.csv.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a scenario file without running it.
    Validate { config: PathBuf },
    /// Compare the production path against the dense oracle.
    OracleCheck { config: PathBuf },
}

enum Failure {
    Lib(Error),
    Usage(String),
    Oracle(serde_json::Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn out_dir(out: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    out.unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let _seed = cli.seed;
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = out_dir(out, &cfg);
            let report = run_scenario(&cfg, &dir)?;
            let mut summary = report.summary;
            summary["dir"] = json!(dir);
            summary["wall_time_s"] = json!(report.manifest.wall_time_s);
            println!("{}", serde_json::to_string_pretty(&summary).map_err(Error::from)?);
        }
        Command::Sweep { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = out_dir(out, &cfg);
            let report = run_sweep(&cfg, &dir)?;
            let failed = report
                .rows
                .iter()
                .filter(|r| r.pcc.is_none() && r.status != "undefined")
                .count();
            println!(
                "{}",
                json!({
                    "name": cfg.name,
                    "dir": dir,
                    "points": report.rows.len(),
                    "failed": failed,
                    "wall_time_s": report.manifest.wall_time_s,
                })
            );
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            println!(
                "{}",
                json!({
                    "valid": true,
                    "name": cfg.name,
                    "electrons": cfg.electrons.len(),
                    "kernel_path": cfg.uses_kernel(),
                    "sweep_points": cfg.sweep.as_ref().map(|s| s.g.len() * s.n.len() * s.modes.len()),
                    "config_sha256": cfg.hash(),
                })
            );
        }
        Command::OracleCheck { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = oracle_check(&cfg)?;
            let value = serde_json::to_value(&report).map_err(Error::from)?;
            println!("{}", serde_json::to_string_pretty(&value).map_err(Error::from)?);
            if !report.passed {
                return Err(Failure::Oracle(value));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", json!({ "error": "UsageError", "message": msg.trim() }));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", json!({ "error": "UsageError", "message": msg }));
            ExitCode::from(2)
        }
        Err(Failure::Oracle(report)) => {
            eprintln!(
                "{}",
                json!({ "error": "OracleMismatch", "message": "deviation exceeds tolerance", "report": report })
            );
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            let scenario = match &e {
                Error::Scenario { scenario, .. } => Some(scenario.clone()),
                _ => None,
            };
            eprintln!(
                "{}",
                json!({ "error": e.kind(), "message": e.to_string(), "scenario": scenario })
            );
            let code = if matches!(e.kind(), "ConfigError" | "Io") { 2 } else { 1 };
            ExitCode::from(code)
        }
    }
}
