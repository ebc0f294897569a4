//! CSV and JSON forms of a [`JointDistribution`].
//!
//! CSV: a header of axis names followed by `probability`, one row per nonzero
//! point in lexicographic order, probabilities with 12 significant digits.
//!
//! JSON: `{"axes": [{"name", "min", "max"}], "table": [...], "total_mass",
//! "selection_probability", "dropped_mass", "metadata"}` where `table` is the
//! dense row-major table over the axis ranges (last axis fastest). Numbers
//! are written in shortest round-trip form, so JSON is lossless.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::JointDistribution;
use crate::error::{Error, Result};

/// Largest dense table written to JSON.
pub const MAX_JSON_CELLS: usize = 5_000_000;

pub fn to_csv(d: &JointDistribution) -> String {
    let mut out = d.axes().join(",");
    out.push_str(",probability\n");
    for (k, p) in d.iter() {
        for v in k {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&format!("{p:.11e}\n"));
    }
    out
}

pub fn from_csv(text: &str) -> Result<JointDistribution> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?
        .split(',')
        .collect();
    if header.last() != Some(&"probability") || header.len() < 2 {
        return Err(Error::InvalidInput("CSV header must end with `probability`".into()));
    }
    let axes: Vec<String> = header[..header.len() - 1].iter().map(|s| s.to_string()).collect();
    let mut entries = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::InvalidInput(format!(
                "CSV row {} has {} cells",
                row + 2,
                cells.len()
            )));
        }
        let bad = |c: &str| Error::InvalidInput(format!("CSV row {}: cannot parse `{c}`", row + 2));
        let point = cells[..axes.len()]
            .iter()
            .map(|c| c.trim().parse::<i32>().map_err(|_| bad(c)))
            .collect::<Result<Vec<_>>>()?;
        let p = cells[axes.len()].trim();
        entries.push((point, p.parse::<f64>().map_err(|_| bad(p))?));
    }
    JointDistribution::from_entries(axes, entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub name: String,
    pub min: i32,
    pub max: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionJson {
    pub axes: Vec<AxisRange>,
    pub table: Vec<f64>,
    pub total_mass: f64,
    pub selection_probability: f64,
    pub dropped_mass: f64,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

pub fn to_json_value(d: &JointDistribution, metadata: BTreeMap<String, serde_json::Value>) -> Result<DistributionJson> {
    let mut axes = Vec::new();
    for a in d.axes() {
        let (min, max) = d.range(a)?.unwrap_or((0, 0));
        axes.push(AxisRange {
            name: a.clone(),
            min,
            max,
        });
    }
    let dims: Vec<usize> = axes.iter().map(|a| (a.max - a.min + 1) as usize).collect();
    let cells = dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
    let cells = match cells {
        Some(c) if c <= MAX_JSON_CELLS => c,
        _ => {
            return Err(Error::InvalidInput(format!(
                "dense table over {dims:?} is too large for JSON; marginalize first or use CSV"
            )))
        }
    };
    let mut table = vec![0.0; cells];
    for (k, p) in d.iter() {
        let mut idx = 0;
        for (i, v) in k.iter().enumerate() {
            idx = idx * dims[i] + (v - axes[i].min) as usize;
        }
        table[idx] = *p;
    }
    Ok(DistributionJson {
        axes,
        table,
        total_mass: d.total_mass(),
        selection_probability: d.selection_probability(),
        dropped_mass: d.dropped_mass(),
        metadata,
    })
}

pub fn to_json(d: &JointDistribution, metadata: BTreeMap<String, serde_json::Value>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_json_value(d, metadata)?)?)
}

pub fn from_json(text: &str) -> Result<JointDistribution> {
    let j: DistributionJson = serde_json::from_str(text)?;
    let dims: Vec<usize> = j.axes.iter().map(|a| (a.max - a.min + 1).max(0) as usize).collect();
    if dims.iter().product::<usize>() != j.table.len() {
        return Err(Error::InvalidInput(
            "JSON table length does not match axis ranges".into(),
        ));
    }
    let mut entries = Vec::new();
    for (flat, &p) in j.table.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut rest = flat;
        let mut point = vec![0; dims.len()];
        for i in (0..dims.len()).rev() {
            point[i] = j.axes[i].min + (rest % dims[i]) as i32;
            rest /= dims[i];
        }
        entries.push((point, p));
    }
    let mut d = JointDistribution::from_entries(j.axes.iter().map(|a| a.name.clone()).collect(), entries)?;
    d.selection_probability = j.selection_probability;
    d.dropped_mass = j.dropped_mass;
    Ok(d)
}
