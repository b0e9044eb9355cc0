//! Scenario runners: capture efficiency versus target distance, MSD
//! comparison, angular-speed sweep, and the 3D replication.
//!
//! Every trajectory draws from its own stream keyed on
//! `(master_seed, run_index, trajectory_index)`, where `run_index` packs a
//! hash of the cell (dimension, model, distance, ω) above the run number.
//! Results therefore depend only on the configuration and seed, never on
//! the number of worker threads or on which other cells are requested.

use rayon::prelude::*;

use crate::analytics::{
    derive_coefficients, msd_closed_form, msd_closed_form_3d, MomentAccumulator, MotionCoefficients,
    PhysicalParams,
};
use crate::capture::{aggregate_runs, EfficiencySeries, Target};
use crate::dynamics::{capture_step, free_squared_displacements, step_grid, Dimension, StepConfig};
use crate::error::{Error, Result};
use crate::model::{ChiralAxis, Model};
use crate::stochastics::{derive_stream, SeedSpec};

/// Bits of `run_index` reserved for the run number.
const RUN_BITS: u32 = 24;
pub const MAX_RUNS: usize = 1 << RUN_BITS;

// Trajectories per reduction block in the MSD experiment.
const MSD_BLOCK: usize = 4096;

/// Which scenario to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    DistanceSweep,
    Msd,
    OmegaSweep,
    Sweep3d,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DistanceSweep => "distance_sweep",
            ExperimentKind::Msd => "msd",
            ExperimentKind::OmegaSweep => "omega_sweep",
            ExperimentKind::Sweep3d => "sweep_3d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "distance_sweep" => Some(ExperimentKind::DistanceSweep),
            "msd" => Some(ExperimentKind::Msd),
            "omega_sweep" => Some(ExperimentKind::OmegaSweep),
            "sweep_3d" => Some(ExperimentKind::Sweep3d),
            _ => None,
        }
    }

    pub fn is_capture(self) -> bool {
        !matches!(self, ExperimentKind::Msd)
    }
}

pub const DEFAULT_DISTANCES: [f64; 8] = [2.0, 4.0, 6.0, 7.78, 10.0, 14.0, 20.0, 30.0];
pub const DEFAULT_OMEGAS: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_EVAL_TIMES: [f64; 4] = [0.5, 0.78, 2.0, 5.0];

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dimension: Dimension,
    pub models: Vec<Model>,
    pub physical: PhysicalParams,
    pub n_particles: usize,
    pub n_runs: usize,
    /// s
    pub t_total: f64,
    /// s
    pub dt: f64,
    /// s
    pub record_every: f64,
    /// μm
    pub target_radius: f64,
    /// μm
    pub distances: Vec<f64>,
    /// rad/s; ω sweep only.
    pub omegas: Vec<f64>,
    /// s
    pub eval_times: Vec<f64>,
    pub master_seed: u64,
    pub chiral_axis: ChiralAxis,
    /// For `sweep_3d`: also run the planar sweep and report the comparison.
    pub compare_2d: bool,
}

impl ExperimentConfig {
    /// Default parameter set for `experiment`, with the given models.
    pub fn defaults(experiment: ExperimentKind, models: Vec<Model>) -> Self {
        let capture = experiment.is_capture();
        Self {
            experiment,
            dimension: if experiment == ExperimentKind::Sweep3d {
                Dimension::Three
            } else {
                Dimension::Two
            },
            models,
            physical: PhysicalParams::default(),
            n_particles: 1000,
            n_runs: 100,
            t_total: 5.0,
            dt: 0.01,
            record_every: if capture { 0.01 } else { 0.05 },
            target_radius: 5.0,
            distances: match experiment {
                ExperimentKind::OmegaSweep => vec![7.78],
                _ => DEFAULT_DISTANCES.to_vec(),
            },
            omegas: DEFAULT_OMEGAS.to_vec(),
            eval_times: DEFAULT_EVAL_TIMES.to_vec(),
            master_seed: 42,
            chiral_axis: ChiralAxis::Lab,
            compare_2d: false,
        }
    }

    pub fn coefficients(&self) -> Result<MotionCoefficients> {
        derive_coefficients(&self.physical)
    }

    /// Checks every invariant, including grid consistency.
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        if self.models.is_empty() {
            return Err(Error::MissingKey("models"));
        }
        if has_duplicates(self.models.iter()) {
            return Err(invalid("models", "duplicate model"));
        }
        if self.n_particles < 1 {
            return Err(range("n_particles", self.n_particles as f64, "must be >= 1"));
        }
        if self.n_runs < 1 || self.n_runs > MAX_RUNS {
            return Err(range("n_runs", self.n_runs as f64, "must be in [1, 2^24]"));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(range("t_total", self.t_total, "must be > 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(range("dt", self.dt, "must be > 0"));
        }
        if self.record_every.is_nan() || self.record_every <= 0.0 {
            return Err(range("record_every", self.record_every, "must be > 0"));
        }
        if !(self.target_radius > 0.0 && self.target_radius.is_finite()) {
            return Err(range("target_radius", self.target_radius, "must be > 0"));
        }
        step_grid(self.t_total, self.record_every, self.dt)?;
        match (self.experiment, self.dimension) {
            (ExperimentKind::Sweep3d, Dimension::Two) => {
                return Err(invalid("dimension", "sweep_3d requires dimension = 3"))
            }
            (ExperimentKind::OmegaSweep, _) if self.models != [Model::ChiralAbp] => {
                return Err(invalid("models", "omega_sweep runs CHIRAL_ABP only"))
            }
            _ => {}
        }
        if self.experiment.is_capture() {
            if self.distances.is_empty() {
                return Err(invalid("distances", "at least one distance is required"));
            }
            if let Some(&l) = self.distances.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                return Err(range("distances", l, "must be >= 0"));
            }
            if has_duplicates(self.distances.iter().map(|l| l.to_bits())) {
                return Err(invalid("distances", "duplicate distance"));
            }
            if self.eval_times.is_empty() {
                return Err(invalid("eval_times", "at least one evaluation time is required"));
            }
            let grid = self.record_grid();
            for &t in &self.eval_times {
                if !(t >= 0.0 && t <= self.t_total * (1.0 + 1e-12)) {
                    return Err(range("eval_times", t, "must lie in [0, t_total]"));
                }
                if crate::analytics::grid_index(&grid, t).is_none() {
                    return Err(invalid(
                        "eval_times",
                        &format!("{t} s is not a multiple of record_every = {} s", self.record_every),
                    ));
                }
            }
            if has_duplicates(self.eval_times.iter().map(|t| t.to_bits())) {
                return Err(invalid("eval_times", "duplicate time"));
            }
        }
        if self.experiment == ExperimentKind::OmegaSweep {
            if self.omegas.is_empty() {
                return Err(invalid("omegas", "at least one angular speed is required"));
            }
            if let Some(&w) = self.omegas.iter().find(|w| !w.is_finite()) {
                return Err(range("omegas", w, "must be finite"));
            }
            if has_duplicates(self.omegas.iter().map(|w| w.to_bits())) {
                return Err(invalid("omegas", "duplicate angular speed"));
            }
        }
        Ok(())
    }

    /// Recording grid `0, record_every, …, t_total`.
    pub fn record_grid(&self) -> Vec<f64> {
        let n = (self.t_total / self.record_every).round() as usize;
        (0..=n).map(|i| i as f64 * self.record_every).collect()
    }
}

fn range(name: &'static str, value: f64, bound: &'static str) -> Error {
    Error::OutOfRange { name, value, bound }
}

fn invalid(key: &str, message: &str) -> Error {
    Error::InvalidValue {
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn has_duplicates<T: Eq + std::hash::Hash>(items: impl Iterator<Item = T>) -> bool {
    let mut seen = std::collections::HashSet::new();
    items.into_iter().any(|x| !seen.insert(x))
}

/// One row of `capture_efficiency.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureRow {
    pub experiment: &'static str,
    pub dimension: u8,
    pub model: Model,
    pub l_um: f64,
    pub omega_rad_s: f64,
    pub time_s: f64,
    pub mean_efficiency: f64,
    pub std_efficiency: f64,
    pub n_particles: usize,
    pub n_runs: usize,
}

/// One row of `msd.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdRow {
    pub model: Model,
    pub time_s: f64,
    pub empirical_msd_um2: f64,
    pub stderr_um2: f64,
    pub closed_form_msd_um2: f64,
}

/// Planar versus spatial capture efficiency at one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionComparison {
    pub model: Model,
    pub l_um: f64,
    pub omega_rad_s: f64,
    pub time_s: f64,
    pub efficiency_2d: f64,
    pub efficiency_3d: f64,
    /// Whether the 3D efficiency does not exceed the 2D one.
    pub spatial_not_above_planar: bool,
}

/// Output of an experiment, rows in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub enum ResultTable {
    Capture(Vec<CaptureRow>),
    Msd(Vec<MsdRow>),
}

impl ResultTable {
    pub fn capture_rows(&self) -> Option<&[CaptureRow]> {
        match self {
            ResultTable::Capture(r) => Some(r),
            ResultTable::Msd(_) => None,
        }
    }

    pub fn msd_rows(&self) -> Option<&[MsdRow]> {
        match self {
            ResultTable::Msd(r) => Some(r),
            ResultTable::Capture(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ResultTable::Capture(r) => r.len(),
            ResultTable::Msd(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// FNV-1a over a byte description of the cell, then a SplitMix finalizer.
fn cell_key(tag: &str, dimension: Dimension, model: Model, distance: f64, omega: f64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(tag.as_bytes());
    feed(&[dimension.as_u8()]);
    feed(model.name().as_bytes());
    feed(&distance.to_bits().to_le_bytes());
    feed(&omega.to_bits().to_le_bytes());
    let mut z = h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) >> RUN_BITS
}

fn run_index(cell: u64, run: usize) -> u64 {
    (cell << RUN_BITS) | run as u64
}

/// A single (dimension, model, distance, ω) capture cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureCell {
    pub dimension: Dimension,
    pub model: Model,
    pub distance: f64,
    /// Angular speed; only meaningful for chiral particles.
    pub omega: f64,
}

/// Runs experiments on a fixed-size worker pool.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `threads = None` uses rayon's default.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n.max(1));
        }
        Ok(Self {
            pool: builder.build()?,
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Dispatches on `cfg.experiment`.
    pub fn run(&self, cfg: &ExperimentConfig) -> Result<ResultTable> {
        match cfg.experiment {
            ExperimentKind::DistanceSweep => self.run_distance_sweep(cfg),
            ExperimentKind::Msd => self.run_msd_experiment(cfg),
            ExperimentKind::OmegaSweep => self.run_omega_sweep(cfg),
            ExperimentKind::Sweep3d => self.run_3d(cfg),
        }
    }

    /// Aggregated capture efficiency of one cell at `cfg.eval_times`.
    pub fn run_capture_cell(&self, cfg: &ExperimentConfig, cell: CaptureCell) -> Result<EfficiencySeries> {
        let params = PhysicalParams {
            angular_speed: cell.omega,
            ..cfg.physical
        };
        let coeffs = derive_coefficients(&params)?;
        let step = StepConfig::new(cell.model, coeffs, params, cfg.dt)?.with_chiral_axis(cfg.chiral_axis);
        let target = Target::on_x_axis(cell.distance, cfg.target_radius)?;
        let horizon = cfg.eval_times.iter().copied().fold(0.0, f64::max);
        let (n_steps, _) = step_grid(horizon, cfg.dt, cfg.dt)?;
        let omega_key = if cell.model == Model::ChiralAbp { cell.omega } else { 0.0 };
        let key = cell_key("capture", cell.dimension, cell.model, cell.distance, omega_key);
        let n = cfg.n_particles;
        let seed = cfg.master_seed;
        let dim = cell.dimension;

        let steps: Vec<Option<u64>> = self.pool.install(|| {
            (0..cfg.n_runs * n)
                .into_par_iter()
                .map(|flat| {
                    let (run, traj) = (flat / n, flat % n);
                    let mut stream = derive_stream(SeedSpec::new(seed, run_index(key, run), traj as u64));
                    capture_step([0.0; 3], n_steps, &step, dim, &target, &mut stream)
                })
                .collect()
        });

        let runs = steps
            .chunks(n)
            .map(|chunk| {
                EfficiencySeries::from_capture_times(
                    chunk.iter().map(|k| k.map(|k| k as f64 * cfg.dt)),
                    n,
                    &cfg.eval_times,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        aggregate_runs(&runs)
    }

    fn capture_table(
        &self,
        cfg: &ExperimentConfig,
        dimension: Dimension,
        experiment: &'static str,
        cells: Vec<CaptureCell>,
    ) -> Result<Vec<CaptureRow>> {
        let mut rows = Vec::with_capacity(cells.len() * cfg.eval_times.len());
        for cell in cells {
            let series = self.run_capture_cell(cfg, cell)?;
            for (k, &t) in series.times.iter().enumerate() {
                rows.push(CaptureRow {
                    experiment,
                    dimension: dimension.as_u8(),
                    model: cell.model,
                    l_um: cell.distance,
                    omega_rad_s: cell.omega,
                    time_s: t,
                    mean_efficiency: series.fraction_captured[k],
                    std_efficiency: series.std[k],
                    n_particles: cfg.n_particles,
                    n_runs: cfg.n_runs,
                });
            }
        }
        sort_capture_rows(&mut rows);
        Ok(rows)
    }

    fn sweep_cells(cfg: &ExperimentConfig, dimension: Dimension) -> Vec<CaptureCell> {
        let mut cells = Vec::new();
        for &model in &cfg.models {
            for &distance in &cfg.distances {
                let omega = if model == Model::ChiralAbp {
                    cfg.physical.angular_speed
                } else {
                    0.0
                };
                cells.push(CaptureCell {
                    dimension,
                    model,
                    distance,
                    omega,
                });
            }
        }
        cells
    }

    /// Capture efficiency for every model × distance at each evaluation time.
    pub fn run_distance_sweep(&self, cfg: &ExperimentConfig) -> Result<ResultTable> {
        cfg.validate()?;
        let cells = Self::sweep_cells(cfg, cfg.dimension);
        let name = match cfg.dimension {
            Dimension::Two => ExperimentKind::DistanceSweep.name(),
            Dimension::Three => ExperimentKind::Sweep3d.name(),
        };
        Ok(ResultTable::Capture(self.capture_table(cfg, cfg.dimension, name, cells)?))
    }

    /// The distance sweep with spatial dynamics.
    pub fn run_3d(&self, cfg: &ExperimentConfig) -> Result<ResultTable> {
        if cfg.dimension != Dimension::Three {
            return Err(invalid("dimension", "sweep_3d requires dimension = 3"));
        }
        self.run_distance_sweep(cfg)
    }

    /// Chiral capture efficiency for every ω × distance at each evaluation time.
    pub fn run_omega_sweep(&self, cfg: &ExperimentConfig) -> Result<ResultTable> {
        cfg.validate()?;
        let mut cells = Vec::new();
        for &omega in &cfg.omegas {
            for &distance in &cfg.distances {
                cells.push(CaptureCell {
                    dimension: cfg.dimension,
                    model: Model::ChiralAbp,
                    distance,
                    omega,
                });
            }
        }
        Ok(ResultTable::Capture(self.capture_table(
            cfg,
            cfg.dimension,
            ExperimentKind::OmegaSweep.name(),
            cells,
        )?))
    }

    /// Empirical MSD of free particles next to the closed form, on the recording grid.
    ///
    /// The ensemble pools `n_particles × n_runs` trajectories per model.
    pub fn run_msd_experiment(&self, cfg: &ExperimentConfig) -> Result<ResultTable> {
        cfg.validate()?;
        let coeffs = cfg.coefficients()?;
        let (n_steps, stride) = step_grid(cfg.t_total, cfg.record_every, cfg.dt)?;
        let times = cfg.record_grid();
        let mut rows = Vec::with_capacity(cfg.models.len() * times.len());
        for &model in &cfg.models {
            let step = StepConfig::new(model, coeffs, cfg.physical, cfg.dt)?
                .with_chiral_axis(cfg.chiral_axis);
            let omega_key = if model == Model::ChiralAbp { cfg.physical.angular_speed } else { 0.0 };
            let key = cell_key("msd", cfg.dimension, model, 0.0, omega_key);
            let acc = self.free_msd(cfg, &step, key, times.len(), n_steps, stride);
            let n = acc[0].count() as f64;
            for (k, &t) in times.iter().enumerate() {
                let closed = match cfg.dimension {
                    Dimension::Two => msd_closed_form(model, &coeffs, &cfg.physical, t)?,
                    Dimension::Three => {
                        msd_closed_form_3d(model, &coeffs, &cfg.physical, cfg.chiral_axis, t)?
                    }
                };
                rows.push(MsdRow {
                    model,
                    time_s: t,
                    empirical_msd_um2: acc[k].mean(),
                    stderr_um2: acc[k].std_dev() / n.sqrt(),
                    closed_form_msd_um2: closed,
                });
            }
        }
        rows.sort_by(|a, b| a.model.cmp(&b.model).then(a.time_s.total_cmp(&b.time_s)));
        Ok(ResultTable::Msd(rows))
    }

    fn free_msd(
        &self,
        cfg: &ExperimentConfig,
        step: &StepConfig,
        key: u64,
        n_times: usize,
        n_steps: u64,
        stride: u64,
    ) -> Vec<MomentAccumulator> {
        let total = cfg.n_particles * cfg.n_runs;
        let n = cfg.n_particles;
        let mut acc = vec![MomentAccumulator::default(); n_times];
        let mut start = 0;
        while start < total {
            let end = (start + MSD_BLOCK).min(total);
            let block: Vec<Vec<f64>> = self.pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|flat| {
                        let (run, traj) = (flat / n, flat % n);
                        let mut stream =
                            derive_stream(SeedSpec::new(cfg.master_seed, run_index(key, run), traj as u64));
                        let mut out = Vec::with_capacity(n_times);
                        free_squared_displacements(n_steps, stride, step, cfg.dimension, &mut stream, &mut out);
                        out
                    })
                    .collect()
            });
            for sq in &block {
                for (a, &x) in acc.iter_mut().zip(sq) {
                    a.push(x);
                }
            }
            start = end;
        }
        acc
    }
}

fn sort_capture_rows(rows: &mut [CaptureRow]) {
    rows.sort_by(|a, b| {
        a.dimension
            .cmp(&b.dimension)
            .then(a.model.cmp(&b.model))
            .then(a.l_um.total_cmp(&b.l_um))
            .then(a.omega_rad_s.total_cmp(&b.omega_rad_s))
            .then(a.time_s.total_cmp(&b.time_s))
    });
}

/// Pairs planar and spatial rows on (model, l, ω, time).
pub fn compare_dimensions(planar: &[CaptureRow], spatial: &[CaptureRow]) -> Vec<DimensionComparison> {
    let mut out = Vec::new();
    for s in spatial {
        if let Some(p) = planar.iter().find(|p| {
            p.model == s.model
                && p.l_um == s.l_um
                && p.omega_rad_s == s.omega_rad_s
                && (p.time_s - s.time_s).abs() < 1e-9
        }) {
            out.push(DimensionComparison {
                model: s.model,
                l_um: s.l_um,
                omega_rad_s: s.omega_rad_s,
                time_s: s.time_s,
                efficiency_2d: p.mean_efficiency,
                efficiency_3d: s.mean_efficiency,
                spatial_not_above_planar: s.mean_efficiency <= p.mean_efficiency,
            });
        }
    }
    out
}
