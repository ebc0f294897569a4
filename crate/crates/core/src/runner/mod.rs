//! Scenario files, runs, sweeps and the files they write.

mod config;
mod oracle_check;
mod sweep;

pub use config::{
    photon_for, ComputePath, ElectronCoupling, OracleSpec, OutputSpec, ScenarioConfig, SweepSpec, TableFormat,
};
pub use oracle_check::{oracle_check, OracleReport};
pub use sweep::{rows_to_csv, run_sweep, sweep_points, sweep_rows, SweepReport, SweepRow};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::classical::{classical_distribution, classical_limit_distance, ClassicalCoupling, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::evolution::{
    scatter, scatter_blocks, scatter_measured, Cutoffs, InteractionMode, JointAmplitude, ScatterOptions, Truncation,
};
use crate::smatrix::TwoElectronKernel;
use crate::states::PhotonState;
use crate::stats::export::{to_csv, to_json};
use crate::stats::{from_branches, marginalize, mix, pcc, post_select, to_distribution, JointDistribution, PccResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which implementation actually ran.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsedPath {
    Kernel,
    Evolution,
    Blocks,
}

/// Largest unitarity error accepted from the factorized paths before `auto`
/// recomputes a component by block propagation.
pub const ACCURACY_TOL: f64 = 1e-10;
/// Edge probability accepted by block propagation.
pub const BLOCK_EDGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub n_cutoff: u32,
    pub j_window: (i32, i32),
    pub prune_tol: f64,
    pub dropped_budget: f64,
    /// Photon probability beyond the initial state's own cutoff.
    pub photon_truncated_mass: f64,
    /// Total probability missing from the joint table.
    pub dropped_mass: f64,
    pub components: usize,
    /// Components recomputed by block propagation.
    pub block_components: usize,
}

/// In-memory result of one scenario.
#[derive(Clone, Debug)]
pub struct Simulation {
    /// Axes `photon, e1, …, eN`.
    pub joint: JointDistribution,
    /// `joint` after the configured post-selection.
    pub conditioned: JointDistribution,
    /// Path of the first pure component.
    pub path: UsedPath,
    pub truncation: TruncationReport,
}

impl Simulation {
    pub fn pcc(&self, a: &str, b: &str) -> Result<PccResult> {
        pcc(&self.conditioned, a, b)
    }
}

/// Runs the scattering described by `cfg` without touching the filesystem.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation> {
    simulate_inner(cfg).map_err(|e| e.in_scenario(&cfg.name))
}

fn simulate_inner(cfg: &ScenarioConfig) -> Result<Simulation> {
    cfg.validate()?;
    let c = cfg.couplings()?;
    let photon = cfg.photon.build(cfg.truncation_tol)?;
    let cut = cfg.cutoffs.resolve(&c, photon.n_cutoff())?;
    let components = photon.components();

    let tables = components
        .par_iter()
        .map(|(w, pure)| Ok((*w, component_table(cfg, pure, &cut)?)))
        .collect::<Result<Vec<_>>>()?;
    let path = tables[0].1 .1;
    let block_components = tables.iter().filter(|(_, (_, p))| *p == UsedPath::Blocks).count();
    let tables: Vec<(f64, JointDistribution)> = tables.into_iter().map(|(w, (d, _))| (w, d)).collect();
    let mut joint = if tables.len() == 1 {
        tables.into_iter().next().map(|(_, d)| d).expect("one component")
    } else {
        mix(&tables)?
    };
    let dropped = if photon.is_pure() {
        joint.dropped_mass()
    } else {
        joint.dropped_mass() + photon.truncated_mass()
    };
    if dropped > cut.dropped_budget {
        return Err(Error::CutoffBudgetExceeded {
            dropped,
            budget: cut.dropped_budget,
        });
    }
    joint = joint.with_dropped_mass(dropped);
    let constraints: Vec<(&str, i32)> = cfg.post_select.iter().map(|(a, v)| (a.as_str(), *v)).collect();
    let conditioned = if constraints.is_empty() {
        joint.clone()
    } else {
        post_select(&joint, &constraints)?
    };
    Ok(Simulation {
        joint,
        conditioned,
        path,
        truncation: TruncationReport {
            n_cutoff: cut.n_cutoff,
            j_window: cut.j_window,
            prune_tol: cut.prune_tol,
            dropped_budget: cut.dropped_budget,
            photon_truncated_mass: photon.truncated_mass(),
            dropped_mass: dropped,
            components: components.len(),
            block_components,
        },
    })
}

fn component_table(cfg: &ScenarioConfig, pure: &PhotonState, cut: &Cutoffs) -> Result<(JointDistribution, UsedPath)> {
    let first = match cfg.path {
        ComputePath::Blocks => return Ok((blocks_table(cfg, pure, cut)?, UsedPath::Blocks)),
        ComputePath::Kernel => return Ok((kernel_table(cfg, pure, cut)?.0, UsedPath::Kernel)),
        ComputePath::Evolution => return Ok((evolution_table(cfg, pure, cut)?.0, UsedPath::Evolution)),
        ComputePath::Auto if beyond_series_reach(cfg, pure) => {
            return Ok((blocks_table(cfg, pure, cut)?, UsedPath::Blocks));
        }
        ComputePath::Auto if cfg.kernel_eligible() => kernel_table(cfg, pure, cut).map(|r| (r, UsedPath::Kernel)),
        ComputePath::Auto => evolution_table(cfg, pure, cut).map(|r| (r, UsedPath::Evolution)),
    };
    // Explicit cutoffs are honoured: their budget errors are reported.
    let automatic = cfg.cutoffs.n_cutoff.is_none() && cfg.cutoffs.j_window.is_none();
    match first {
        Ok(((d, error), path)) if error <= ACCURACY_TOL || cfg.measure_between => Ok((d, path)),
        Ok(_) => Ok((blocks_table(cfg, pure, cut)?, UsedPath::Blocks)),
        Err(Error::CutoffBudgetExceeded { .. }) if automatic && !cfg.measure_between => {
            Ok((blocks_table(cfg, pure, cut)?, UsedPath::Blocks))
        }
        Err(e) => Err(e),
    }
}

/// Simultaneous components with `Σ|G|·√(n+1)` above this go straight to
/// block propagation; the series lose precision to cancellation there.
pub const SERIES_REACH: f64 = 10.0;

fn beyond_series_reach(cfg: &ScenarioConfig, pure: &PhotonState) -> bool {
    if cfg.mode != InteractionMode::Simultaneous || cfg.measure_between {
        return false;
    }
    let n_max = pure
        .amplitudes()
        .unwrap_or_default()
        .iter()
        .map(|(n, _)| *n)
        .max()
        .unwrap_or(0);
    let strength: f64 = cfg.electrons.iter().map(|e| e.magnitude).sum::<f64>() * ((n_max + 1) as f64).sqrt();
    strength > SERIES_REACH
}

/// Kernel column and its unitarity error.
fn kernel_table(cfg: &ScenarioConfig, pure: &PhotonState, cut: &Cutoffs) -> Result<(JointDistribution, f64)> {
    let amps = pure.amplitudes().unwrap_or_default();
    let n_i = match amps.as_slice() {
        [(n, _)] => *n,
        _ => return Err(Error::Config("the two-electron kernel needs Fock input".into())),
    };
    let kernel = TwoElectronKernel::new(&cfg.couplings()?, &cfg.series)?;
    let col = kernel.column(n_i, cut.n_cutoff, cut.j_window, cut.prune_tol)?;
    if col.deficit.abs() > cut.dropped_budget {
        return Err(Error::CutoffBudgetExceeded {
            dropped: col.deficit.abs(),
            budget: cut.dropped_budget,
        });
    }
    let entries = col
        .entries
        .iter()
        .map(|(t, a)| (vec![t.n_f as i32, t.dj, t.dk], a.norm_sqr()));
    let d = JointDistribution::from_entries(cfg.joint_axes(), entries)?.with_dropped_mass(col.deficit.max(0.0));
    Ok((d, col.deficit.abs()))
}

fn scatter_options(cfg: &ScenarioConfig, cut: &Cutoffs) -> ScatterOptions {
    ScatterOptions {
        mode: cfg.mode,
        ordering: cfg.ordering,
        electron_order: None,
        truncation: Truncation {
            n_cutoff: Some(cut.n_cutoff),
            j_window: Some(cut.j_window),
            dropped_budget: cut.dropped_budget,
            prune_tol: cut.prune_tol,
        },
        series: cfg.series,
    }
}

/// Factorized evolution and its unitarity error.
fn evolution_table(cfg: &ScenarioConfig, pure: &PhotonState, cut: &Cutoffs) -> Result<(JointDistribution, f64)> {
    let c = cfg.couplings()?;
    let start = JointAmplitude::from_photon(pure, c.len(), cut.n_cutoff, cut.j_window)?;
    let opts = scatter_options(cfg, cut);
    let d = if cfg.measure_between {
        from_branches(&scatter_measured(&start, &c, &opts)?)
    } else {
        to_distribution(&scatter(&start, &c, &opts)?)
    };
    let error = (start.norm_sqr() - d.total_mass()).abs();
    Ok((d, error))
}

fn blocks_table(cfg: &ScenarioConfig, pure: &PhotonState, cut: &Cutoffs) -> Result<JointDistribution> {
    let c = cfg.couplings()?;
    let start = JointAmplitude::from_photon(pure, c.len(), cut.n_cutoff, (0, 0))?;
    let out = scatter_blocks(
        &start,
        &c,
        cfg.mode,
        BLOCK_EDGE_TOL.min(cut.dropped_budget),
        cfg.oracle.dim_limit,
    )?;
    Ok(to_distribution(&out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub config: ScenarioConfig,
    pub path: Option<UsedPath>,
    pub truncation: Option<TruncationReport>,
    pub outputs: Vec<OutputFile>,
    pub wall_time_s: f64,
}

/// Files written by one run plus the in-memory results.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub simulation: Simulation,
    pub summary: Value,
    pub manifest: Manifest,
}

struct Writer {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(OutputFile {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    fn finish(self, manifest: &mut Manifest) -> Result<()> {
        manifest.outputs = self.files;
        let text = serde_json::to_string_pretty(manifest)?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

fn table_text(d: &JointDistribution, format: TableFormat, cfg: &ScenarioConfig) -> Result<String> {
    Ok(match format {
        TableFormat::Csv => to_csv(d),
        TableFormat::Json => {
            let mut meta = BTreeMap::new();
            meta.insert("scenario".to_string(), json!(cfg.name));
            meta.insert("config_sha256".to_string(), json!(cfg.hash()));
            to_json(d, meta)? + "\n"
        }
    })
}

fn pcc_json(axes: &[String; 2], r: &PccResult) -> Value {
    json!({
        "axes": axes,
        "value": r.value,
        "means": r.means,
        "variances": r.variances,
        "covariance": r.covariance,
    })
}

/// Runs `cfg` and writes its outputs, `summary.json` and `manifest.json`
/// into `dir`.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<RunReport> {
    let started = Instant::now();
    let sim = simulate(cfg)?;
    let scoped = |e: Error| e.in_scenario(&cfg.name);
    let mut w = Writer::new(dir).map_err(scoped)?;
    let d = &sim.conditioned;
    let mut pccs = Vec::new();
    let mut classical = Value::Null;
    for out in &cfg.outputs {
        match out {
            OutputSpec::JointTable { format, include_photon } => {
                let table = if *include_photon || !d.axes().iter().any(|a| a == "photon") {
                    d.clone()
                } else {
                    let keep: Vec<&str> = d.axes().iter().filter(|a| *a != "photon").map(String::as_str).collect();
                    marginalize(d, &keep).map_err(scoped)?
                };
                let name = format!("joint.{}", format.extension());
                w.write(&name, &table_text(&table, *format, cfg).map_err(scoped)?)
                    .map_err(scoped)?;
            }
            OutputSpec::Marginals { axes, format } => {
                let keep: Vec<&str> = axes.iter().map(String::as_str).collect();
                let m = marginalize(d, &keep).map_err(scoped)?;
                let name = format!("marginal_{}.{}", axes.join("_"), format.extension());
                w.write(&name, &table_text(&m, *format, cfg).map_err(scoped)?)
                    .map_err(scoped)?;
            }
            OutputSpec::Pcc { axes } => {
                let r = pcc(d, &axes[0], &axes[1]).map_err(scoped)?;
                pccs.push(pcc_json(axes, &r));
            }
            OutputSpec::ClassicalComparison { format } => {
                let cc = ClassicalCoupling::from_quantum(&cfg.couplings()?, cfg.photon.n_avg()).map_err(scoped)?;
                let table = classical_distribution(&cc, DEFAULT_TAIL_TOL).map_err(scoped)?;
                let tv = classical_limit_distance(d, &cc).map_err(scoped)?;
                let axes = ["e1".to_string(), "e2".to_string()];
                let r = if cc.electrons() >= 2 {
                    pcc_json(&axes, &pcc(&table, "e1", "e2").map_err(scoped)?)
                } else {
                    Value::Null
                };
                let name = format!("classical.{}", format.extension());
                w.write(&name, &table_text(&table, *format, cfg).map_err(scoped)?)
                    .map_err(scoped)?;
                classical = json!({
                    "script_g": cc.as_slice().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "pcc": r,
                    "total_variation": tv,
                });
            }
        }
    }
    let summary = json!({
        "name": cfg.name,
        "path": sim.path,
        "axes": d.axes(),
        "total_mass": d.total_mass(),
        "selection_probability": d.selection_probability(),
        "dropped_mass": sim.truncation.dropped_mass,
        "pcc": pccs,
        "classical": classical,
    });
    w.write("summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))
        .map_err(scoped)?;
    let mut manifest = Manifest {
        name: cfg.name.clone(),
        version: VERSION.to_string(),
        command: "run".to_string(),
        config_sha256: cfg.hash(),
        config: cfg.clone(),
        path: Some(sim.path),
        truncation: Some(sim.truncation.clone()),
        outputs: Vec::new(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    w.finish(&mut manifest).map_err(scoped)?;
    Ok(RunReport {
        dir: dir.to_path_buf(),
        simulation: sim,
        summary,
        manifest,
    })
}

#[cfg(test)]
mod tests;
