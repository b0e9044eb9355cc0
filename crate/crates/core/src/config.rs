//! Flat `key = value` configuration files.
//!
//! ```text
//! # comments start with '#'
//! experiment = distance_sweep
//! models = ABP, RTP, CHIRAL_ABP
//! distances = 2, 4, 7.78, 10
//! ```
//!
//! Lists are comma-separated and may be wrapped in `[ ]`. Keys are exactly the
//! field names of [`ExperimentConfig`] plus the physical parameters; unknown
//! keys are rejected. `experiment` and `models` are required, everything else
//! has a default. `tumble_rate` defaults to the rotational diffusion rate.

use std::fmt::Write as _;
use std::path::Path;

use crate::analytics::derive_coefficients;
use crate::dynamics::Dimension;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, ExperimentKind};
use crate::model::{ChiralAxis, Model};

pub const KEYS: [&str; 21] = [
    "experiment",
    "dimension",
    "models",
    "particle_radius",
    "temperature",
    "viscosity",
    "speed",
    "angular_speed",
    "tumble_rate",
    "n_particles",
    "n_runs",
    "t_total",
    "dt",
    "record_every",
    "target_radius",
    "distances",
    "omegas",
    "eval_times",
    "master_seed",
    "chiral_axis",
    "compare_2d",
];

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: "reading config",
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses config text, applies defaults, and validates the result.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut entries: Vec<(usize, &'static str, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Syntax {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| Error::UnknownKey {
            line: line_no,
            key: key.to_string(),
        })?;
        if entries.iter().any(|(_, k, _)| k == known) {
            return Err(Error::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            });
        }
        entries.push((line_no, known, value.trim().to_string()));
    }
    let get = |key: &str| entries.iter().find(|(_, k, _)| *k == key).map(|(_, _, v)| v.as_str());

    let kind_text = get("experiment").ok_or(Error::MissingKey("experiment"))?;
    let kind = ExperimentKind::parse(kind_text).ok_or_else(|| Error::InvalidValue {
        key: "experiment".into(),
        message: format!(
            "unknown experiment `{kind_text}` (expected distance_sweep, msd, omega_sweep or sweep_3d)"
        ),
    })?;
    let models = list(get("models").ok_or(Error::MissingKey("models"))?)
        .into_iter()
        .map(|s| s.parse::<Model>().map_err(|m| invalid("models", m)))
        .collect::<Result<Vec<_>>>()?;

    let mut cfg = ExperimentConfig::defaults(kind, models);
    let mut tumble_rate = None;
    for (_, key, value) in &entries {
        let v = value.as_str();
        match *key {
            "experiment" | "models" => {}
            "dimension" => {
                let d: u8 = v.parse().map_err(|_| invalid(key, format!("`{v}` is not 2 or 3")))?;
                cfg.dimension = Dimension::from_u8(d).ok_or(Error::OutOfRange {
                    name: "dimension",
                    value: d as f64,
                    bound: "must be 2 or 3",
                })?;
            }
            "particle_radius" => cfg.physical.particle_radius = number(key, v)?,
            "temperature" => cfg.physical.temperature = number(key, v)?,
            "viscosity" => cfg.physical.viscosity = number(key, v)?,
            "speed" => cfg.physical.speed = number(key, v)?,
            "angular_speed" => cfg.physical.angular_speed = number(key, v)?,
            "tumble_rate" => {
                if v != "auto" {
                    tumble_rate = Some(number(key, v)?);
                }
            }
            "n_particles" => cfg.n_particles = count(key, v)?,
            "n_runs" => cfg.n_runs = count(key, v)?,
            "t_total" => cfg.t_total = number(key, v)?,
            "dt" => cfg.dt = number(key, v)?,
            "record_every" => cfg.record_every = number(key, v)?,
            "target_radius" => cfg.target_radius = number(key, v)?,
            "distances" => cfg.distances = numbers(key, v)?,
            "omegas" => cfg.omegas = numbers(key, v)?,
            "eval_times" => cfg.eval_times = numbers(key, v)?,
            "master_seed" => {
                cfg.master_seed = v
                    .parse()
                    .map_err(|_| invalid(key, format!("`{v}` is not an unsigned 64-bit integer")))?
            }
            "chiral_axis" => cfg.chiral_axis = v.parse().map_err(|e| invalid(key, e))?,
            "compare_2d" => {
                cfg.compare_2d = v.parse().map_err(|_| invalid(key, format!("`{v}` is not true or false")))?
            }
            other => unreachable!("key `{other}` listed in KEYS but not handled"),
        }
    }

    cfg.physical.tumble_rate = match tumble_rate {
        Some(rate) => rate,
        None => {
            let base = crate::analytics::PhysicalParams {
                tumble_rate: 0.0,
                ..cfg.physical
            };
            derive_coefficients(&base)?.rotational_diffusion
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn list(v: &str) -> Vec<&str> {
    let v = v.trim();
    let v = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(v);
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| invalid(key, format!("`{v}` is not a finite number")))
}

fn numbers(key: &str, v: &str) -> Result<Vec<f64>> {
    list(v).into_iter().map(|s| number(key, s)).collect()
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer")))
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Canonical text of a resolved config; parsing it yields `cfg` again.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let p = &cfg.physical;
    let models: Vec<&str> = cfg.models.iter().map(|m| m.name()).collect();
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("experiment", cfg.experiment.name().into());
    put("dimension", cfg.dimension.as_u8().to_string());
    put("models", models.join(", "));
    put("particle_radius", p.particle_radius.to_string());
    put("temperature", p.temperature.to_string());
    put("viscosity", p.viscosity.to_string());
    put("speed", p.speed.to_string());
    put("angular_speed", p.angular_speed.to_string());
    put("tumble_rate", p.tumble_rate.to_string());
    put("n_particles", cfg.n_particles.to_string());
    put("n_runs", cfg.n_runs.to_string());
    put("t_total", cfg.t_total.to_string());
    put("dt", cfg.dt.to_string());
    put("record_every", cfg.record_every.to_string());
    put("target_radius", cfg.target_radius.to_string());
    put("distances", join(&cfg.distances));
    put("omegas", join(&cfg.omegas));
    put("eval_times", join(&cfg.eval_times));
    put("master_seed", cfg.master_seed.to_string());
    put("chiral_axis", ChiralAxis::name(cfg.chiral_axis).into());
    put("compare_2d", cfg.compare_2d.to_string());
    s
}
