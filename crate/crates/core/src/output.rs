//! CSV emission, run manifests, and the `run` entry point.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{parse_config, render_config};
use crate::dynamics::Dimension;
use crate::error::{Error, Result};
use crate::experiments::{compare_dimensions, CaptureRow, DimensionComparison, Engine, ExperimentConfig, ExperimentKind, MsdRow, ResultTable};

pub const CAPTURE_FILE: &str = "capture_efficiency.csv";
pub const MSD_FILE: &str = "msd.csv";
pub const COMPARISON_FILE: &str = "dimension_comparison.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const CAPTURE_HEADER: &str =
    "experiment,dimension,model,l_um,omega_rad_s,time_s,mean_efficiency,std_efficiency,n_particles,n_runs";
pub const MSD_HEADER: &str = "model,time_s,empirical_msd_um2,stderr_um2,closed_form_msd_um2";
pub const COMPARISON_HEADER: &str =
    "model,l_um,omega_rad_s,time_s,efficiency_2d,efficiency_3d,spatial_not_above_planar";

/// Formats `x` rounded to 9 significant digits, in the shortest form that
/// reads back to that rounded value. Never uses a locale.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

pub fn capture_csv(rows: &[CaptureRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CAPTURE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.dimension,
            r.model,
            format_number(r.l_um),
            format_number(r.omega_rad_s),
            format_number(r.time_s),
            format_number(r.mean_efficiency),
            format_number(r.std_efficiency),
            r.n_particles,
            r.n_runs
        );
    }
    s
}

pub fn msd_csv(rows: &[MsdRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(MSD_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.model,
            format_number(r.time_s),
            format_number(r.empirical_msd_um2),
            format_number(r.stderr_um2),
            format_number(r.closed_form_msd_um2)
        );
    }
    s
}

pub fn comparison_csv(rows: &[DimensionComparison]) -> String {
    let mut s = String::from(COMPARISON_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.model,
            format_number(r.l_um),
            format_number(r.omega_rad_s),
            format_number(r.time_s),
            format_number(r.efficiency_2d),
            format_number(r.efficiency_3d),
            r.spatial_not_above_planar
        );
    }
    s
}

/// Derived coefficients echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedEcho {
    pub translational_diffusion_um2_s: f64,
    pub rotational_diffusion_rad2_s: f64,
    pub persistence_length_um: f64,
    pub persistence_time_s: f64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub master_seed: u64,
    /// Canonical config text; feeding it back through the parser reproduces the run.
    pub config: String,
    pub derived: DerivedEcho,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            context: "reading manifest",
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The config this manifest was produced from.
    pub fn config(&self) -> Result<ExperimentConfig> {
        parse_config(&self.config)
    }
}

fn write(path: PathBuf, contents: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|source| Error::Io {
        context: "writing",
        path: path.clone(),
        source,
    })?;
    outputs.push(path);
    Ok(())
}

/// Runs `cfg`, writes its CSV files and `manifest.json` into `output_dir`.
pub fn run(cfg: &ExperimentConfig, output_dir: &Path, engine: &Engine) -> Result<RunManifest> {
    cfg.validate()?;
    let started = Instant::now();
    fs::create_dir_all(output_dir).map_err(|source| Error::Io {
        context: "creating output directory",
        path: output_dir.to_path_buf(),
        source,
    })?;
    let mut outputs = Vec::new();
    match engine.run(cfg)? {
        ResultTable::Msd(rows) => write(output_dir.join(MSD_FILE), &msd_csv(&rows), &mut outputs)?,
        ResultTable::Capture(mut rows) => {
            if cfg.experiment == ExperimentKind::Sweep3d && cfg.compare_2d {
                let planar_cfg = ExperimentConfig {
                    dimension: Dimension::Two,
                    experiment: ExperimentKind::DistanceSweep,
                    ..cfg.clone()
                };
                let planar = engine.run_distance_sweep(&planar_cfg)?;
                let planar = planar.capture_rows().unwrap_or_default();
                let comparison = compare_dimensions(planar, &rows);
                let mut all = planar.to_vec();
                all.append(&mut rows);
                rows = all;
                write(output_dir.join(COMPARISON_FILE), &comparison_csv(&comparison), &mut outputs)?;
            }
            write(output_dir.join(CAPTURE_FILE), &capture_csv(&rows), &mut outputs)?;
        }
    }
    outputs.sort();

    let coeffs = cfg.coefficients()?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.name().into(),
        master_seed: cfg.master_seed,
        config: render_config(cfg),
        derived: DerivedEcho {
            translational_diffusion_um2_s: coeffs.translational_diffusion,
            rotational_diffusion_rad2_s: coeffs.rotational_diffusion,
            persistence_length_um: coeffs.persistence_length,
            persistence_time_s: coeffs.persistence_time,
        },
        threads: engine.threads(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    let path = output_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(|source| Error::Io {
        context: "writing",
        path,
        source,
    })?;
    Ok(manifest)
}
