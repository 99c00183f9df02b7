//! Named channel scenarios and the preset file format.
//!
//! A preset file holds one TOML table per scenario:
//!
//! ```toml
//! [office]
//! K_dB = 9.0
//! Sh_dB = 3.0
//! delta = 0.6
//! # optional specular powers; default to the unit-mean split
//! P1 = 0.4
//! P2 = 0.2
//! ```
//!
//! A `name` key overrides the table name.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::ase::Scenario;
use crate::error::{Error, Result};
use crate::jfts::JftsParams;

/// (name, K dB, S_h dB, Δ)
pub const PRESETS: [(&str, f64, f64, f64); 6] = [
    ("same-room", 13.0, 12.0, 0.9),
    ("one-wall", 10.0, 6.0, 0.7),
    ("two-walls", 7.0, -1.0, 0.5),
    ("three-walls", 4.0, -6.0, 0.3),
    ("fig3-same-room", 10.0, 10.5, 0.75),
    ("fig3-2-3-walls", 6.5, -1.5, 0.25),
];

/// The four wall-count scenarios, best channel first.
pub const WALL_SCENARIOS: [&str; 4] = ["same-room", "one-wall", "two-walls", "three-walls"];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

pub fn preset(name: &str) -> Result<Scenario> {
    let (n, k, s, d) = PRESETS.iter().find(|p| p.0 == name.trim()).ok_or_else(|| {
        Error::invalid(format!(
            "unknown scenario '{name}'; valid: {}",
            preset_names().join(", ")
        ))
    })?;
    Ok(Scenario {
        name: n.to_string(),
        params: JftsParams::from_db(*k, *s, *d)?,
    })
}

pub fn all_presets() -> Vec<Scenario> {
    PRESETS
        .iter()
        .map(|p| preset(p.0).expect("built-in presets are valid"))
        .collect()
}

pub fn wall_presets() -> Vec<Scenario> {
    WALL_SCENARIOS
        .iter()
        .map(|n| preset(n).expect("built-in presets are valid"))
        .collect()
}

/// Scenario from inline dB parameters, named after them.
pub fn inline(k_db: f64, sh_db: f64, delta: f64) -> Result<Scenario> {
    Ok(Scenario {
        name: format!("K{k_db}dB-Sh{sh_db}dB-D{delta}"),
        params: JftsParams::from_db(k_db, sh_db, delta)?,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: Option<String>,
    #[serde(rename = "K_dB")]
    k_db: f64,
    #[serde(rename = "Sh_dB")]
    sh_db: f64,
    delta: f64,
    #[serde(rename = "P1")]
    p1: Option<f64>,
    #[serde(rename = "P2")]
    p2: Option<f64>,
}

/// Parses preset file contents. Scenarios come back sorted by table name.
pub fn parse_presets(text: &str) -> Result<Vec<Scenario>> {
    let table: BTreeMap<String, Entry> = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = Vec::with_capacity(table.len());
    for (key, e) in table {
        let mut params = JftsParams::from_db(e.k_db, e.sh_db, e.delta)?;
        match (e.p1, e.p2) {
            (Some(p1), Some(p2)) => params = params.with_powers(p1, p2)?,
            (None, None) => {}
            _ => {
                return Err(Error::Parse(format!(
                    "scenario '{key}': P1 and P2 must be given together"
                )))
            }
        }
        out.push(Scenario {
            name: e.name.unwrap_or(key),
            params,
        });
    }
    Ok(out)
}

pub fn load_presets(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path)?;
    parse_presets(&text)
}

/// Looks `name` up in `extra` first, then in the built-in presets.
pub fn resolve(name: &str, extra: &[Scenario]) -> Result<Scenario> {
    if let Some(s) = extra.iter().find(|s| s.name == name) {
        return Ok(s.clone());
    }
    preset(name).map_err(|_| {
        let mut names: Vec<String> = extra.iter().map(|s| s.name.clone()).collect();
        names.extend(preset_names().into_iter().map(String::from));
        Error::invalid(format!("unknown scenario '{name}'; valid: {}", names.join(", ")))
    })
}
