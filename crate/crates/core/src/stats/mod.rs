//! Probability tables over photon number and electron energy gains, Pearson
//! correlation and post-selection.

pub mod export;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::JointAmplitude;
use crate::smatrix::NeumaierSum;

pub const PHOTON_AXIS: &str = "photon";
pub const DEFAULT_DEGENERATE_TOL: f64 = 1e-18;

/// Name of the energy-gain axis of electron `index` (0-based): `e1`, `e2`, ….
pub fn electron_axis(index: usize) -> String {
    format!("e{}", index + 1)
}

/// Sparse non-negative table over named integer axes.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    axes: Vec<String>,
    table: BTreeMap<Vec<i32>, f64>,
    total_mass: f64,
    selection_probability: f64,
    dropped_mass: f64,
}

impl JointDistribution {
    pub fn new(axes: Vec<String>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("a distribution needs at least one axis".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate axis `{a}`")));
            }
        }
        Ok(Self {
            axes,
            table: BTreeMap::new(),
            total_mass: 0.0,
            selection_probability: 1.0,
            dropped_mass: 0.0,
        })
    }

    /// Builds a table, summing duplicate points.
    pub fn from_entries<I>(axes: Vec<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i32>, f64)>,
    {
        let mut d = Self::new(axes)?;
        for (point, p) in entries {
            d.add(point, p)?;
        }
        d.refresh_mass();
        Ok(d)
    }

    fn add(&mut self, point: Vec<i32>, p: f64) -> Result<()> {
        if point.len() != self.axes.len() {
            return Err(Error::InvalidInput(format!(
                "point {point:?} does not match axes {:?}",
                self.axes
            )));
        }
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "probability {p} at {point:?} is not a non-negative number"
            )));
        }
        if p > 0.0 {
            *self.table.entry(point).or_default() += p;
        }
        Ok(())
    }

    fn refresh_mass(&mut self) {
        self.total_mass = self.table.values().copied().collect::<NeumaierSum>().total();
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, point: &[i32]) -> f64 {
        self.table.get(point).copied().unwrap_or(0.0)
    }

    /// Points in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i32>, &f64)> {
        self.table.iter()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Probability of the post-selected event this table is conditioned on
    /// (1 for an unconditioned table).
    pub fn selection_probability(&self) -> f64 {
        self.selection_probability
    }

    /// Probability lost to truncation upstream of this table.
    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    pub fn with_dropped_mass(mut self, dropped: f64) -> Self {
        self.dropped_mass = dropped;
        self
    }

    /// Smallest and largest coordinate along `axis` among nonzero entries.
    pub fn range(&self, axis: &str) -> Result<Option<(i32, i32)>> {
        let i = self.axis_index(axis)?;
        Ok(self.table.keys().map(|p| p[i]).fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        }))
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.total_mass <= 0.0 {
            return Err(Error::EmptySlice);
        }
        let mut d = self.clone();
        for p in d.table.values_mut() {
            *p /= self.total_mass;
        }
        d.refresh_mass();
        Ok(d)
    }

    /// Mean and variance of one axis under the normalized table.
    pub fn moments(&self, axis: &str) -> Result<(f64, f64)> {
        let i = self.axis_index(axis)?;
        if self.total_mass <= 0.0 {
            return Err(Error::EmptySlice);
        }
        let mean = self
            .table
            .iter()
            .map(|(k, p)| k[i] as f64 * p)
            .collect::<NeumaierSum>()
            .total()
            / self.total_mass;
        let var = self
            .table
            .iter()
            .map(|(k, p)| (k[i] as f64 - mean).powi(2) * p)
            .collect::<NeumaierSum>()
            .total()
            / self.total_mass;
        Ok((mean, var))
    }
}

/// Born-rule table of a joint state: axes `photon, e1, …, eN`, with electron
/// coordinates the energy gain relative to the initial (zero) index.
pub fn to_distribution(state: &JointAmplitude) -> JointDistribution {
    from_branches(std::slice::from_ref(state))
}

/// Table of an incoherent sum of states (e.g. measurement branches).
pub fn from_branches(branches: &[JointAmplitude]) -> JointDistribution {
    let electrons = branches.first().map_or(1, |b| b.electrons());
    let mut axes = vec![PHOTON_AXIS.to_string()];
    axes.extend((0..electrons).map(electron_axis));
    let mut d = JointDistribution::new(axes).expect("distinct axes");
    for b in branches {
        for (label, amp) in b.sorted() {
            let mut point = Vec::with_capacity(electrons + 1);
            point.push(label.n as i32);
            point.extend_from_slice(&label.j[..electrons]);
            d.add(point, amp.norm_sqr()).expect("finite amplitudes");
        }
    }
    d.refresh_mass();
    d.dropped_mass = branches.first().map_or(0.0, |b| b.dropped_mass());
    d
}

/// Weighted sum of tables over identical axes (convex mixing of states).
pub fn mix(components: &[(f64, JointDistribution)]) -> Result<JointDistribution> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidInput("empty mixture".into()))?;
    let mut acc: BTreeMap<Vec<i32>, NeumaierSum> = BTreeMap::new();
    let mut dropped = NeumaierSum::new();
    for (w, d) in components {
        if d.axes != first.1.axes {
            return Err(Error::InvalidInput("mixture components have different axes".into()));
        }
        for (k, p) in &d.table {
            acc.entry(k.clone()).or_default().add(w * p);
        }
        dropped.add(w * d.dropped_mass);
    }
    let mut out = JointDistribution::from_entries(first.1.axes.clone(), acc.into_iter().map(|(k, s)| (k, s.total())))?;
    out.dropped_mass = dropped.total();
    Ok(out)
}

/// Sums out every axis not in `keep`; the result has the axes in `keep` order.
pub fn marginalize(d: &JointDistribution, keep: &[&str]) -> Result<JointDistribution> {
    let idx = keep.iter().map(|a| d.axis_index(a)).collect::<Result<Vec<_>>>()?;
    let mut acc: BTreeMap<Vec<i32>, NeumaierSum> = BTreeMap::new();
    for (k, p) in &d.table {
        acc.entry(idx.iter().map(|&i| k[i]).collect()).or_default().add(*p);
    }
    let mut out = JointDistribution::from_entries(
        keep.iter().map(|s| s.to_string()).collect(),
        acc.into_iter().map(|(k, s)| (k, s.total())),
    )?;
    out.selection_probability = d.selection_probability;
    out.dropped_mass = d.dropped_mass;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PccResult {
    /// `None` when either variance is below the degeneracy tolerance.
    pub value: Option<f64>,
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub covariance: f64,
}

impl PccResult {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

pub fn pcc(d: &JointDistribution, axis_a: &str, axis_b: &str) -> Result<PccResult> {
    pcc_with_tol(d, axis_a, axis_b, DEFAULT_DEGENERATE_TOL)
}

/// Pearson correlation of two axes under the normalized table.
pub fn pcc_with_tol(d: &JointDistribution, axis_a: &str, axis_b: &str, degenerate_tol: f64) -> Result<PccResult> {
    let (ia, ib) = (d.axis_index(axis_a)?, d.axis_index(axis_b)?);
    let (ma, va) = d.moments(axis_a)?;
    let (mb, vb) = d.moments(axis_b)?;
    let cov = d
        .table
        .iter()
        .map(|(k, p)| (k[ia] as f64 - ma) * (k[ib] as f64 - mb) * p)
        .collect::<NeumaierSum>()
        .total()
        / d.total_mass;
    let value = if va < degenerate_tol || vb < degenerate_tol {
        None
    } else {
        Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
    };
    Ok(PccResult {
        value,
        means: [ma, mb],
        variances: [va, vb],
        covariance: cov,
    })
}

/// Conditions on the given axis values, drops those axes and renormalizes.
pub fn post_select(d: &JointDistribution, constraints: &[(&str, i32)]) -> Result<JointDistribution> {
    let fixed = constraints
        .iter()
        .map(|(a, v)| Ok((d.axis_index(a)?, *v)))
        .collect::<Result<Vec<_>>>()?;
    let keep: Vec<usize> = (0..d.axes.len())
        .filter(|i| !fixed.iter().any(|(f, _)| f == i))
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidInput(
            "post-selection must leave at least one axis".into(),
        ));
    }
    let mut slice = BTreeMap::new();
    let mut mass = NeumaierSum::new();
    for (k, p) in &d.table {
        if fixed.iter().all(|&(i, v)| k[i] == v) {
            slice.insert(keep.iter().map(|&i| k[i]).collect::<Vec<_>>(), *p);
            mass.add(*p);
        }
    }
    let mass = mass.total();
    if !(mass > 0.0) {
        return Err(Error::EmptySlice);
    }
    let mut out = JointDistribution::from_entries(
        keep.iter().map(|&i| d.axes[i].clone()).collect(),
        slice.into_iter().map(|(k, p)| (k, p / mass)),
    )?;
    out.selection_probability = d.selection_probability * mass / d.total_mass;
    out.dropped_mass = d.dropped_mass;
    Ok(out)
}
