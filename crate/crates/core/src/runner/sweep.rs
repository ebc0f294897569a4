use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{photon_for, OutputSpec, ScenarioConfig};
use super::{simulate, Manifest, Writer, VERSION};
use crate::error::{Error, Result};
use crate::evolution::InteractionMode;
use crate::states::StateKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: InteractionMode,
    pub g: f64,
    pub n: f64,
    pub state: StateKind,
    pub pcc: Option<f64>,
    pub abs_pcc: Option<f64>,
    pub dropped_mass: Option<f64>,
    /// `ok`, `undefined` (degenerate variance) or the error kind.
    pub status: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub manifest: Manifest,
}

/// One scenario per grid point, modes outermost, then `g`, then `n`.
pub fn sweep_points(cfg: &ScenarioConfig) -> Result<Vec<ScenarioConfig>> {
    cfg.validate()?;
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config(format!("scenario `{}` has no [sweep] table", cfg.name)))?;
    let kind = s.state.unwrap_or(cfg.photon.kind());
    let mut out = Vec::new();
    for &mode in &s.modes {
        for &g in &s.g {
            for &n in &s.n {
                let mut p = cfg.clone();
                p.name = format!("{}-{}-g{}-n{}", cfg.name, mode_name(mode), g, n);
                p.sweep = None;
                p.mode = mode;
                p.measure_between &= mode == InteractionMode::Successive;
                p.photon = photon_for(kind, n)?;
                for e in &mut p.electrons {
                    e.magnitude = g;
                }
                p.outputs.retain(|o| matches!(o, OutputSpec::Pcc { .. }));
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn mode_name(m: InteractionMode) -> &'static str {
    match m {
        InteractionMode::Simultaneous => "simultaneous",
        InteractionMode::Successive => "successive",
    }
}

fn pcc_axes(cfg: &ScenarioConfig) -> [String; 2] {
    cfg.outputs
        .iter()
        .find_map(|o| match o {
            OutputSpec::Pcc { axes } => Some(axes.clone()),
            _ => None,
        })
        .unwrap_or_else(|| ["e1".to_string(), "e2".to_string()])
}

fn evaluate(p: &ScenarioConfig, g: f64, n: f64) -> SweepRow {
    let axes = pcc_axes(p);
    let mut row = SweepRow {
        mode: p.mode,
        g,
        n,
        state: p.photon.kind(),
        pcc: None,
        abs_pcc: None,
        dropped_mass: None,
        status: "ok".into(),
        message: String::new(),
    };
    match simulate(p).and_then(|sim| Ok((sim.pcc(&axes[0], &axes[1])?, sim.truncation.dropped_mass))) {
        Ok((r, dropped)) => {
            row.pcc = r.value;
            row.abs_pcc = r.value.map(f64::abs);
            row.dropped_mass = Some(dropped);
            if r.value.is_none() {
                row.status = "undefined".into();
            }
        }
        Err(e) => {
            row.status = e.kind().into();
            row.message = e.to_string();
        }
    }
    row
}

/// Evaluates every grid point in parallel; failed points are recorded in
/// their row and the sweep carries on.
pub fn sweep_rows(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    let points = sweep_points(cfg)?;
    let s = cfg.sweep.as_ref().expect("validated sweep");
    let coords: Vec<(f64, f64)> = s
        .modes
        .iter()
        .flat_map(|_| s.g.iter().flat_map(|&g| s.n.iter().map(move |&n| (g, n))))
        .collect();
    Ok(points
        .par_iter()
        .zip(coords.par_iter())
        .map(|(p, &(g, n))| evaluate(p, g, n))
        .collect())
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.11e}")).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("mode,g,n,state,pcc,abs_pcc,dropped_mass,status,message\n");
    for r in rows {
        let state = serde_json::to_value(r.state).expect("state kind");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},\"{}\"\n",
            mode_name(r.mode),
            r.g,
            r.n,
            state.as_str().unwrap_or_default(),
            fmt(r.pcc),
            fmt(r.abs_pcc),
            fmt(r.dropped_mass),
            r.status,
            r.message.replace('"', "'"),
        ));
    }
    out
}

/// Runs the sweep and writes `sweep.csv`, `sweep.json` and `manifest.json`.
pub fn run_sweep(cfg: &ScenarioConfig, dir: &Path) -> Result<SweepReport> {
    let started = Instant::now();
    let rows = sweep_rows(cfg).map_err(|e| e.in_scenario(&cfg.name))?;
    let scoped = |e: Error| e.in_scenario(&cfg.name);
    let mut w = Writer::new(dir).map_err(scoped)?;
    w.write("sweep.csv", &rows_to_csv(&rows)).map_err(scoped)?;
    w.write("sweep.json", &(serde_json::to_string_pretty(&rows)? + "\n"))
        .map_err(scoped)?;
    let mut manifest = Manifest {
        name: cfg.name.clone(),
        version: VERSION.to_string(),
        command: "sweep".to_string(),
        config_sha256: cfg.hash(),
        config: cfg.clone(),
        path: None,
        truncation: None,
        outputs: Vec::new(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    w.finish(&mut manifest).map_err(scoped)?;
    Ok(SweepReport { rows, manifest })
}
