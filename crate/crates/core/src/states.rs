//! Initial states of the photon mode in the number basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smatrix::{ln_factorial, NeumaierSum};

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Fock,
    Coherent,
    Thermal,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Populations {
    /// Amplitudes of a pure state, indexed by photon number.
    Pure(Vec<Complex64>),
    /// Diagonal of a mixed state, indexed by photon number.
    Mixed(Vec<f64>),
}

/// A truncated photon-number distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonState {
    kind: StateKind,
    populations: Populations,
    n_avg: f64,
    truncated_mass: f64,
}

impl PhotonState {
    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn populations(&self) -> &Populations {
        &self.populations
    }

    /// Largest retained photon number.
    pub fn n_cutoff(&self) -> u32 {
        let len = match &self.populations {
            Populations::Pure(a) => a.len(),
            Populations::Mixed(p) => p.len(),
        };
        len as u32 - 1
    }

    /// The requested mean photon number.
    pub fn n_avg(&self) -> f64 {
        self.n_avg
    }

    /// Probability dropped by the cutoff.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.populations, Populations::Pure(_))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        match &self.populations {
            Populations::Pure(a) => a.iter().map(|z| z.norm_sqr()).collect(),
            Populations::Mixed(p) => p.clone(),
        }
    }

    pub fn probability(&self, n: u32) -> f64 {
        self.probabilities().get(n as usize).copied().unwrap_or(0.0)
    }

    pub fn retained_mass(&self) -> f64 {
        self.probabilities().into_iter().collect::<NeumaierSum>().total()
    }

    /// Mean photon number of the retained (unnormalized) distribution.
    pub fn mean(&self) -> f64 {
        let p = self.probabilities();
        p.iter()
            .enumerate()
            .map(|(n, w)| n as f64 * w)
            .collect::<NeumaierSum>()
            .total()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probabilities()
            .iter()
            .enumerate()
            .map(|(n, w)| (n as f64 - mean).powi(2) * w)
            .collect::<NeumaierSum>()
            .total()
    }

    /// Nonzero `(n, amplitude)` pairs of a pure state.
    pub fn amplitudes(&self) -> Option<Vec<(u32, Complex64)>> {
        match &self.populations {
            Populations::Pure(a) => Some(
                a.iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm_sqr() > 0.0)
                    .map(|(n, z)| (n as u32, *z))
                    .collect(),
            ),
            Populations::Mixed(_) => None,
        }
    }

    /// The state as a convex mixture: one pure component per weight.
    ///
    /// A pure state is a single component with weight 1; a mixed state is
    /// split into its Fock components.
    pub fn components(&self) -> Vec<(f64, PhotonState)> {
        match &self.populations {
            Populations::Pure(_) => vec![(1.0, self.clone())],
            Populations::Mixed(p) => p
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(n, w)| (*w, make_fock(n as u32)))
                .collect(),
        }
    }
}

pub fn make_fock(n_i: u32) -> PhotonState {
    let mut a = vec![Complex64::new(0.0, 0.0); n_i as usize + 1];
    a[n_i as usize] = Complex64::new(1.0, 0.0);
    PhotonState {
        kind: StateKind::Fock,
        populations: Populations::Pure(a),
        n_avg: n_i as f64,
        truncated_mass: 0.0,
    }
}

fn check_n_avg(n_avg: f64) -> Result<()> {
    if n_avg.is_finite() && n_avg >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "n_avg must be finite and >= 0, got {n_avg}"
        )))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "truncation_tol must lie in (0, 1), got {tol}"
        )))
    }
}

/// Retains `p(0..=cutoff)`; with no explicit cutoff, stops at the first `n`
/// whose remaining tail is below `tol`.
fn truncate(
    p: impl Fn(u32) -> f64,
    tail_after: impl Fn(u32, f64) -> f64,
    n_cutoff: Option<u32>,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    const HARD_LIMIT: u32 = 1_000_000;
    let mut probs = Vec::new();
    let mut sum = NeumaierSum::new();
    let mut n = 0u32;
    loop {
        let v = p(n);
        probs.push(v);
        sum.add(v);
        let tail = tail_after(n, sum.total()).max(0.0);
        match n_cutoff {
            Some(c) if n == c => {
                if tail > tol {
                    return Err(Error::CutoffTooSmall {
                        cutoff: c,
                        retained: sum.total(),
                        tol,
                    });
                }
                return Ok((probs, tail));
            }
            None if tail <= tol => {
                return Ok((probs, tail));
            }
            _ => {}
        }
        n += 1;
        if n > HARD_LIMIT {
            return Err(Error::InvalidInput("photon distribution too broad".into()));
        }
    }
}

/// Poissonian pure state with real positive amplitude `α = √n_avg`.
pub fn make_coherent(n_avg: f64, n_cutoff: Option<u32>, truncation_tol: f64) -> Result<PhotonState> {
    check_n_avg(n_avg)?;
    check_tol(truncation_tol)?;
    if n_avg == 0.0 {
        let mut s = make_fock(0);
        s.kind = StateKind::Coherent;
        return Ok(s);
    }
    let ln_avg = n_avg.ln();
    let ln_p = |n: u32| -n_avg + n as f64 * ln_avg - ln_factorial(n as u64);
    let (probs, truncated_mass) = truncate(
        |n| ln_p(n).exp(),
        |n, retained| {
            // Past the mode the tail is bounded by a geometric series.
            let next = ln_p(n + 1).exp();
            let ratio = n_avg / (n as f64 + 2.0);
            if ratio < 1.0 {
                next / (1.0 - ratio)
            } else {
                1.0 - retained
            }
        },
        n_cutoff,
        truncation_tol,
    )?;
    let amps = probs
        .iter()
        .enumerate()
        .map(|(n, _)| Complex64::new((0.5 * ln_p(n as u32)).exp(), 0.0))
        .collect();
    Ok(PhotonState {
        kind: StateKind::Coherent,
        populations: Populations::Pure(amps),
        n_avg,
        truncated_mass,
    })
}

/// Geometric mixed state `P(n) = n_avg^n / (n_avg + 1)^(n+1)`.
pub fn make_thermal(n_avg: f64, n_cutoff: Option<u32>, truncation_tol: f64) -> Result<PhotonState> {
    check_n_avg(n_avg)?;
    check_tol(truncation_tol)?;
    let r = n_avg / (n_avg + 1.0);
    let (probs, truncated_mass) = truncate(
        |n| (1.0 - r) * r.powi(n as i32),
        |n, _| r.powi(n as i32 + 1),
        n_cutoff,
        truncation_tol,
    )?;
    Ok(PhotonState {
        kind: StateKind::Thermal,
        populations: Populations::Mixed(probs),
        n_avg,
        truncated_mass,
    })
}

/// Serializable description of an initial photon state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhotonSpec {
    Fock {
        n_i: u32,
    },
    Coherent {
        n_avg: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_cutoff: Option<u32>,
    },
    Thermal {
        n_avg: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_cutoff: Option<u32>,
    },
}

impl PhotonSpec {
    pub fn build(&self, truncation_tol: f64) -> Result<PhotonState> {
        match *self {
            PhotonSpec::Fock { n_i } => Ok(make_fock(n_i)),
            PhotonSpec::Coherent { n_avg, n_cutoff } => make_coherent(n_avg, n_cutoff, truncation_tol),
            PhotonSpec::Thermal { n_avg, n_cutoff } => make_thermal(n_avg, n_cutoff, truncation_tol),
        }
    }

    pub fn kind(&self) -> StateKind {
        match self {
            PhotonSpec::Fock { .. } => StateKind::Fock,
            PhotonSpec::Coherent { .. } => StateKind::Coherent,
            PhotonSpec::Thermal { .. } => StateKind::Thermal,
        }
    }

    /// Mean photon number (`n_i` for a Fock state).
    pub fn n_avg(&self) -> f64 {
        match *self {
            PhotonSpec::Fock { n_i } => n_i as f64,
            PhotonSpec::Coherent { n_avg, .. } | PhotonSpec::Thermal { n_avg, .. } => n_avg,
        }
    }

    /// The same family at a different mean photon number.
    pub fn with_n_avg(&self, n_avg: f64) -> Result<PhotonSpec> {
        Ok(match *self {
            PhotonSpec::Fock { .. } => {
                if n_avg < 0.0 || n_avg.fract() != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "Fock photon number must be a non-negative integer, got {n_avg}"
                    )));
                }
                PhotonSpec::Fock { n_i: n_avg as u32 }
            }
            PhotonSpec::Coherent { .. } => PhotonSpec::Coherent { n_avg, n_cutoff: None },
            PhotonSpec::Thermal { .. } => PhotonSpec::Thermal { n_avg, n_cutoff: None },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_is_a_single_entry() {
        let s = make_fock(5);
        assert_eq!(s.probability(5), 1.0);
        assert_eq!(s.probabilities().iter().filter(|p| **p != 0.0).count(), 1);
        assert_eq!(s.n_cutoff(), 5);
        assert_eq!(make_fock(0).probability(0), 1.0);
    }

    #[test]
    fn coherent_is_poissonian() {
        let s = make_coherent(10.0, None, DEFAULT_TRUNCATION_TOL).unwrap();
        let expected = (-10f64).exp() * 10f64.powi(10) / 3_628_800.0;
        assert!((s.probability(10) - expected).abs() < 1e-15);
        assert!((s.probability(10) - 0.12511).abs() < 1e-5);
        assert!(s.retained_mass() >= 1.0 - DEFAULT_TRUNCATION_TOL);
        assert!((s.mean() - 10.0).abs() / 10.0 < 1e-6);
        assert!((s.variance() - 10.0).abs() < 1e-6);
        assert!(s.truncated_mass() <= DEFAULT_TRUNCATION_TOL);
    }

    #[test]
    fn vacuum_limits() {
        for s in [
            make_coherent(0.0, None, 1e-10).unwrap(),
            make_thermal(0.0, None, 1e-10).unwrap(),
        ] {
            assert_eq!(s.probability(0), 1.0);
            assert_eq!(s.n_cutoff(), 0);
        }
    }

    #[test]
    fn thermal_is_geometric() {
        let s = make_thermal(2.0, None, DEFAULT_TRUNCATION_TOL).unwrap();
        assert!((s.probability(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.probability(1) - 2.0 / 9.0).abs() < 1e-15);
        assert!(!s.is_pure());
        assert!((s.mean() - 2.0).abs() / 2.0 < 1e-6);
        assert!((s.variance() - 6.0).abs() < 1e-5);
        let total: f64 = s.components().iter().map(|(w, _)| w).sum();
        assert!((total + s.truncated_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn explicit_cutoff_too_small_fails() {
        let err = make_coherent(10.0, Some(12), 1e-10).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { cutoff: 12, .. }));
        assert!(make_thermal(5.0, Some(20), 1e-10).is_err());
        assert!(make_coherent(10.0, Some(60), 1e-10).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_coherent(-1.0, None, 1e-10).is_err());
        assert!(make_thermal(f64::NAN, None, 1e-10).is_err());
        assert!(make_coherent(1.0, None, 0.0).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        #[derive(Serialize, Deserialize)]
        struct Wrap {
            photon: PhotonSpec,
        }
        for spec in [
            PhotonSpec::Fock { n_i: 9 },
            PhotonSpec::Coherent {
                n_avg: 9.0,
                n_cutoff: Some(60),
            },
            PhotonSpec::Thermal {
                n_avg: 2.0,
                n_cutoff: None,
            },
        ] {
            let text = toml::to_string(&Wrap { photon: spec.clone() }).unwrap();
            let back: Wrap = toml::from_str(&text).unwrap();
            assert_eq!(back.photon, spec);
        }
    }
}
