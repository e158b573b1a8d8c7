//! Experiment config files.
//!
//! ```toml
//! schema = 1
//!
//! [[experiment]]
//! name = "dania"
//! mass_kg = 4.3e-17
//! gamma_exp_hz = 8e-8        # linewidth / 2π
//! density_kg_m3 = 2200.0     # optional
//! radius_m = 1.67e-7         # optional, derived from mass and density when absent
//! omega0_hz = 1e5            # optional
//! T_env_K = 300.0            # optional
//! unit = "Hz"                # optional, "Hz" or "rad/s" for the *_hz keys
//! ```

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::Deserialize;
use toml::Spanned;

use super::{ExperimentRecord, PhysicalConstants, NDFEB_DENSITY, SILICA_DENSITY};
use crate::error::{Error, Result};

pub const CONFIG_SCHEMA: i64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    schema: Option<Spanned<i64>>,
    #[serde(default)]
    experiment: Vec<Spanned<RawExperiment>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: String,
    mass_kg: f64,
    gamma_exp_hz: f64,
    radius_m: Option<f64>,
    density_kg_m3: Option<f64>,
    omega0_hz: Option<f64>,
    #[serde(rename = "T_env_K")]
    t_env_k: Option<f64>,
    unit: Option<Spanned<String>>,
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

fn key_from_message(message: &str) -> String {
    let mut parts = message.split('`');
    match (parts.next(), parts.next()) {
        (Some(_), Some(key)) => key.to_string(),
        _ => String::from("?"),
    }
}

/// Pontin, Vinante and Dania with the densities assumed for their radii.
pub fn builtin_experiments(consts: &PhysicalConstants) -> Vec<ExperimentRecord> {
    let table = [
        ("pontin", 9.6e-17, 48e-6, SILICA_DENSITY),
        ("vinante", 6.1e-10, 9e-6, NDFEB_DENSITY),
        ("dania", 4.3e-17, 80e-9, SILICA_DENSITY),
    ];
    table
        .into_iter()
        .map(|(name, mass, hz, rho)| {
            ExperimentRecord::new(name, mass, hz, None, Some(rho), None, None, consts)
                .expect("built-in experiments are valid")
        })
        .collect()
}

/// Parses an experiment config. `None` yields the built-in experiments; a
/// source without any content yields an empty list.
pub fn load_experiments(source: Option<&str>, consts: &PhysicalConstants) -> Result<Vec<ExperimentRecord>> {
    let Some(source) = source else {
        return Ok(builtin_experiments(consts));
    };
    let raw: RawFile = toml::from_str(source).map_err(|e| {
        let line = e.span().map(|s| line_of(source, s.start)).unwrap_or(0);
        Error::Parse {
            line,
            key: key_from_message(e.message()),
            message: e.message().to_string(),
        }
    })?;
    match &raw.schema {
        Some(s) if *s.get_ref() == CONFIG_SCHEMA => {}
        Some(s) => {
            return Err(Error::Parse {
                line: line_of(source, s.span().start),
                key: "schema".into(),
                message: format!("unsupported schema {}, expected {CONFIG_SCHEMA}", s.get_ref()),
            })
        }
        None if raw.experiment.is_empty() => return Ok(Vec::new()),
        None => {
            return Err(Error::Parse {
                line: 1,
                key: "schema".into(),
                message: format!("missing `schema = {CONFIG_SCHEMA}` header"),
            })
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.experiment.len());
    for spanned in raw.experiment {
        let line = line_of(source, spanned.span().start);
        let exp = spanned.into_inner();
        let scale = match &exp.unit {
            None => 1.0,
            Some(u) => match u.get_ref().as_str() {
                "Hz" | "hz" => 1.0,
                "rad/s" => 1.0 / (2.0 * PI),
                other => {
                    return Err(Error::Parse {
                        line: line_of(source, u.span().start),
                        key: "unit".into(),
                        message: format!("unknown unit `{other}`, expected \"Hz\" or \"rad/s\""),
                    })
                }
            },
        };
        let rec = ExperimentRecord::new(
            exp.name.clone(),
            exp.mass_kg,
            exp.gamma_exp_hz * scale,
            exp.radius_m,
            exp.density_kg_m3,
            exp.omega0_hz.map(|f| f * scale),
            exp.t_env_k,
            consts,
        )
        .map_err(|e| match e {
            Error::Validation { record, message } => Error::Validation {
                record,
                message: format!("{message} (table at line {line})"),
            },
            other => other,
        })?;
        if !seen.insert(rec.name().to_string()) {
            return Err(Error::Validation {
                record: rec.name().to_string(),
                message: format!("duplicate experiment name (table at line {line})"),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Canonical config text: Hz units, density always explicit, optional keys
/// only when set.
pub fn to_config_string(records: &[ExperimentRecord]) -> String {
    let mut s = format!("schema = {CONFIG_SCHEMA}\n");
    for r in records {
        s.push_str("\n[[experiment]]\n");
        s.push_str(&format!("name = {}\n", toml::Value::String(r.name().to_string())));
        s.push_str(&format!("mass_kg = {:?}\n", r.mass()));
        s.push_str(&format!("gamma_exp_hz = {:?}\n", r.gamma_exp_hz()));
        s.push_str(&format!("density_kg_m3 = {:?}\n", r.density()));
        if let Some(v) = r.radius_input() {
            s.push_str(&format!("radius_m = {v:?}\n"));
        }
        if let Some(v) = r.omega0_hz() {
            s.push_str(&format!("omega0_hz = {v:?}\n"));
        }
        if let Some(v) = r.t_env() {
            s.push_str(&format!("T_env_K = {v:?}\n"));
        }
    }
    s
}
