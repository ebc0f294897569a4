use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::{simulate, UsedPath};
use crate::error::{Error, Result};
use crate::evolution::oracle::DenseOracle;
use crate::evolution::JointAmplitude;
use crate::stats::{mix, to_distribution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub path: UsedPath,
    pub oracle_n_max: u32,
    pub oracle_j_window: (i32, i32),
    pub compared: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Runs the production path and the dense oracle on the scenario's input and
/// compares joint probabilities away from the oracle's truncation edges.
/// Post-selection is ignored.
pub fn oracle_check(cfg: &ScenarioConfig) -> Result<OracleReport> {
    inner(cfg).map_err(|e| e.in_scenario(&cfg.name))
}

fn inner(cfg: &ScenarioConfig) -> Result<OracleReport> {
    if cfg.measure_between {
        return Err(Error::Config("oracle-check does not cover measure_between".into()));
    }
    let mut plain = cfg.clone();
    plain.post_select.clear();
    plain.outputs.clear();
    let sim = simulate(&plain)?;

    let c = cfg.couplings()?;
    let photon = cfg.photon.build(cfg.truncation_tol)?;
    let o = &cfg.oracle;
    let n_max = o
        .n_max
        .unwrap_or_else(|| photon.n_cutoff() + 16 + (8.0 * c.strength()).ceil() as u32);
    let window = o.j_window.unwrap_or_else(|| {
        let w = 8 + (4.0 * c.magnitude_sum()).ceil() as i32;
        (-w, w)
    });
    let oracle = DenseOracle::new(&c, n_max, window, cfg.mode)?.with_dim_limit(o.dim_limit);
    let mut parts = Vec::new();
    for (w, pure) in photon.components() {
        let start = JointAmplitude::from_photon(&pure, c.len(), n_max, window)?;
        parts.push((w, to_distribution(&oracle.propagate(&start)?)));
    }
    let reference = mix(&parts)?;

    let interior = |k: &[i32]| {
        k[0] <= n_max as i32 - o.n_margin as i32
            && k[1..]
                .iter()
                .all(|&j| j >= window.0 + o.j_margin && j <= window.1 - o.j_margin)
    };
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for (k, p) in reference.iter().filter(|(k, _)| interior(k)) {
        worst = worst.max((p - sim.joint.get(k)).abs());
        compared += 1;
    }
    for (k, p) in sim.joint.iter().filter(|(k, _)| interior(k)) {
        if reference.get(k) == 0.0 {
            worst = worst.max(*p);
            compared += 1;
        }
    }
    Ok(OracleReport {
        name: cfg.name.clone(),
        path: sim.path,
        oracle_n_max: n_max,
        oracle_j_window: window,
        compared,
        max_deviation: worst,
        tolerance: o.tolerance,
        passed: worst <= o.tolerance,
    })
}
