use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::{FactorOrdering, InteractionMode, Truncation, MAX_ELECTRONS};
use crate::smatrix::{CouplingSet, SeriesControl};
use crate::states::{PhotonSpec, StateKind, DEFAULT_TRUNCATION_TOL};
use crate::stats::{electron_axis, PHOTON_AXIS};

/// One electron's coupling as magnitude and phase (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronCoupling {
    pub magnitude: f64,
    #[serde(default)]
    pub phase: f64,
}

impl ElectronCoupling {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// Which implementation computes the scattering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputePath {
    /// Two-electron kernel for two electrons and Fock (or Fock-mixture)
    /// input in simultaneous mode, operator evolution otherwise.
    /// Components whose unitarity error exceeds `ACCURACY_TOL` are redone by
    /// block propagation.
    #[default]
    Auto,
    Kernel,
    Evolution,
    /// Exponential of the generator on each conserved block.
    Blocks,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

fn yes() -> bool {
    true
}

fn default_pcc_axes() -> [String; 2] {
    ["e1".to_string(), "e2".to_string()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputSpec {
    /// The (post-selected) joint table, with or without the photon axis.
    JointTable {
        #[serde(default)]
        format: TableFormat,
        #[serde(default = "yes")]
        include_photon: bool,
    },
    Marginals {
        axes: Vec<String>,
        #[serde(default)]
        format: TableFormat,
    },
    Pcc {
        #[serde(default = "default_pcc_axes")]
        axes: [String; 2],
    },
    /// Bessel-product table for the field limit of the coherent input, its
    /// PCC and the total-variation distance to the quantum table.
    ClassicalComparison {
        #[serde(default)]
        format: TableFormat,
    },
}

/// Grid over coupling magnitude and mean photon number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub g: Vec<f64>,
    pub n: Vec<f64>,
    /// State family at every point; the scenario's photon kind if omitted.
    #[serde(default)]
    pub state: Option<StateKind>,
    #[serde(default = "both_modes")]
    pub modes: Vec<InteractionMode>,
}

fn both_modes() -> Vec<InteractionMode> {
    vec![InteractionMode::Simultaneous, InteractionMode::Successive]
}

/// Settings of `oracle-check`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    pub n_max: Option<u32>,
    pub j_window: Option<(i32, i32)>,
    /// Labels this close to the oracle's photon or electron edge are not compared.
    pub n_margin: u32,
    pub j_margin: i32,
    pub tolerance: f64,
    pub dim_limit: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            n_max: None,
            j_window: None,
            n_margin: 8,
            j_margin: 4,
            tolerance: 1e-8,
            dim_limit: crate::evolution::oracle::DEFAULT_DIM_LIMIT,
        }
    }
}

fn default_truncation_tol() -> f64 {
    DEFAULT_TRUNCATION_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub photon: PhotonSpec,
    pub electrons: Vec<ElectronCoupling>,
    #[serde(default)]
    pub mode: InteractionMode,
    #[serde(default)]
    pub ordering: FactorOrdering,
    #[serde(default)]
    pub path: ComputePath,
    /// Successive mode only: measure each electron's energy right after it
    /// interacts instead of composing the interactions coherently.
    #[serde(default)]
    pub measure_between: bool,
    #[serde(default = "default_truncation_tol")]
    pub truncation_tol: f64,
    #[serde(default)]
    pub series: SeriesControl,
    #[serde(default)]
    pub cutoffs: Truncation,
    #[serde(default)]
    pub post_select: BTreeMap<String, i32>,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub oracle: OracleSpec,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn couplings(&self) -> Result<CouplingSet> {
        CouplingSet::new(self.electrons.iter().map(ElectronCoupling::value).collect())
    }

    /// Axis names of the unconditioned joint table.
    pub fn joint_axes(&self) -> Vec<String> {
        let mut axes = vec![PHOTON_AXIS.to_string()];
        axes.extend((0..self.electrons.len()).map(electron_axis));
        axes
    }

    /// Axis names left after post-selection.
    pub fn conditioned_axes(&self) -> Vec<String> {
        self.joint_axes()
            .into_iter()
            .filter(|a| !self.post_select.contains_key(a))
            .collect()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return bad(format!(
                "name `{}` must be non-empty and use only [A-Za-z0-9._-]",
                self.name
            ));
        }
        let n_el = self.electrons.len();
        if n_el == 0 || n_el > MAX_ELECTRONS {
            return bad(format!("electron count must lie in 1..={MAX_ELECTRONS}, got {n_el}"));
        }
        for (i, e) in self.electrons.iter().enumerate() {
            if !(e.magnitude.is_finite() && e.magnitude >= 0.0 && e.phase.is_finite()) {
                return bad(format!(
                    "electron {} coupling must be finite with magnitude >= 0",
                    i + 1
                ));
            }
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol < 1.0) {
            return bad(format!(
                "truncation_tol must lie in (0, 1), got {}",
                self.truncation_tol
            ));
        }
        match self.photon {
            PhotonSpec::Fock { .. } => {}
            PhotonSpec::Coherent { n_avg, .. } | PhotonSpec::Thermal { n_avg, .. } => {
                if !(n_avg.is_finite() && n_avg >= 0.0) {
                    return bad(format!("photon n_avg must be finite and >= 0, got {n_avg}"));
                }
            }
        }
        let wrap = |e: Error| Error::Config(e.to_string());
        self.series.validate().map_err(wrap)?;
        self.cutoffs.validate().map_err(wrap)?;
        if self.cutoffs.prune_tol <= 0.0 {
            return bad("cutoffs.prune_tol must be > 0".into());
        }
        if self.measure_between && self.mode != InteractionMode::Successive {
            return bad("measure_between requires mode = \"successive\"".into());
        }
        if self.measure_between && self.path == ComputePath::Blocks {
            return bad("measure_between is not available with path = \"blocks\"".into());
        }
        if self.path == ComputePath::Kernel && !self.kernel_eligible() {
            return bad("path = \"kernel\" needs two electrons, simultaneous mode and Fock or thermal input".into());
        }

        let joint = self.joint_axes();
        for axis in self.post_select.keys() {
            if !joint.contains(axis) {
                return bad(format!("post_select axis `{axis}` is not one of {joint:?}"));
            }
        }
        let remaining = self.conditioned_axes();
        if remaining.is_empty() {
            return bad("post_select must leave at least one axis".into());
        }
        for out in &self.outputs {
            match out {
                OutputSpec::JointTable { .. } => {}
                OutputSpec::Marginals { axes, .. } => {
                    if axes.is_empty() {
                        return bad("marginals output needs at least one axis".into());
                    }
                    for a in axes {
                        if !remaining.contains(a) {
                            return bad(format!("marginal axis `{a}` is not one of {remaining:?}"));
                        }
                    }
                }
                OutputSpec::Pcc { axes } => {
                    for a in axes {
                        if !remaining.contains(a) {
                            return bad(format!("pcc axis `{a}` is not one of {remaining:?}"));
                        }
                    }
                    if axes[0] == axes[1] {
                        return bad("pcc needs two different axes".into());
                    }
                }
                OutputSpec::ClassicalComparison { .. } => {
                    if !matches!(self.photon, PhotonSpec::Coherent { .. }) {
                        return bad("classical_comparison requires a coherent photon state".into());
                    }
                    if !self.post_select.is_empty() {
                        return bad("classical_comparison cannot be combined with post_select".into());
                    }
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.g.is_empty() || s.n.is_empty() || s.modes.is_empty() {
                return bad("sweep grids must be non-empty".into());
            }
            if s.g.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                return bad("sweep g values must be finite and >= 0".into());
            }
            let kind = s.state.unwrap_or(self.photon.kind());
            for &n in &s.n {
                if !(n.is_finite() && n >= 0.0) || (kind == StateKind::Fock && n.fract() != 0.0) {
                    return bad(format!("sweep n value {n} is not valid for a {kind:?} state"));
                }
            }
        }
        let o = &self.oracle;
        if !(o.tolerance > 0.0) || o.j_margin < 0 || o.dim_limit == 0 {
            return bad("oracle tolerance must be > 0, j_margin >= 0 and dim_limit > 0".into());
        }
        Ok(())
    }

    pub fn kernel_eligible(&self) -> bool {
        self.electrons.len() == 2
            && self.mode == InteractionMode::Simultaneous
            && matches!(self.photon, PhotonSpec::Fock { .. } | PhotonSpec::Thermal { .. })
    }

    pub fn uses_kernel(&self) -> bool {
        match self.path {
            ComputePath::Auto => self.kernel_eligible(),
            ComputePath::Kernel => true,
            ComputePath::Evolution | ComputePath::Blocks => false,
        }
    }
}

/// Photon spec of the given family with mean photon number `n`.
pub fn photon_for(kind: StateKind, n: f64) -> Result<PhotonSpec> {
    match kind {
        StateKind::Fock => PhotonSpec::Fock { n_i: 0 }.with_n_avg(n),
        StateKind::Coherent => Ok(PhotonSpec::Coherent {
            n_avg: n,
            n_cutoff: None,
        }),
        StateKind::Thermal => Ok(PhotonSpec::Thermal {
            n_avg: n,
            n_cutoff: None,
        }),
    }
}
