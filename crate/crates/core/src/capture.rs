//! Absorbing target geometry and capture-efficiency statistics.

use crate::analytics::MomentAccumulator;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

// Slack for comparing capture times against evaluation times that were
// computed through different float paths.
const TIME_EPS: f64 = 1e-9;

/// Absorbing disk (2D) or ball (3D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Target {
    /// Target of radius `radius` centred a distance `distance` along +x from the origin.
    pub fn on_x_axis(distance: f64, radius: f64) -> Result<Self> {
        if !(distance >= 0.0 && distance.is_finite()) {
            return Err(Error::OutOfRange {
                name: "distance",
                value: distance,
                bound: "must be >= 0",
            });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::OutOfRange {
                name: "target_radius",
                value: radius,
                bound: "must be > 0",
            });
        }
        Ok(Self {
            center: [distance, 0.0, 0.0],
            radius,
        })
    }

    #[inline]
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let dz = p[2] - self.center[2];
        dx * dx + dy * dy + dz * dz <= self.radius * self.radius
    }
}

/// Returns the capture point if a step ending at `next` lands in the target.
///
/// Only the end of the step is tested (boundary inclusive); a step that
/// crosses the target and leaves again within `dt` is not caught.
#[inline]
pub fn check_capture(_prev: &[f64; 3], next: &[f64; 3], target: &Target) -> Option<[f64; 3]> {
    target.contains(next).then_some(*next)
}

/// Captured fraction over time, optionally aggregated over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencySeries {
    pub times: Vec<f64>,
    /// Fraction captured by each time (mean over runs when aggregated).
    pub fraction_captured: Vec<f64>,
    /// Sample standard deviation across runs; zeros for a single run.
    pub std: Vec<f64>,
    pub runs: usize,
}

impl EfficiencySeries {
    /// Series for one run from per-particle capture times.
    pub fn from_capture_times<I>(capture_times: I, n_particles: usize, times: &[f64]) -> Result<Self>
    where
        I: IntoIterator<Item = Option<f64>>,
    {
        if n_particles == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let mut counts = vec![0usize; times.len()];
        for tc in capture_times.into_iter().flatten() {
            for (c, &t) in counts.iter_mut().zip(times) {
                if tc <= t + TIME_EPS {
                    *c += 1;
                }
            }
        }
        Ok(Self {
            times: times.to_vec(),
            fraction_captured: counts
                .into_iter()
                .map(|c| c as f64 / n_particles as f64)
                .collect(),
            std: vec![0.0; times.len()],
            runs: 1,
        })
    }

    /// Standard error of the mean at each time.
    pub fn std_error(&self) -> Vec<f64> {
        let n = (self.runs as f64).sqrt();
        self.std.iter().map(|s| s / n).collect()
    }
}

/// Fraction of `ensemble` absorbed by each time in `time_grid`.
pub fn capture_efficiency(ensemble: &[Trajectory], time_grid: &[f64]) -> Result<EfficiencySeries> {
    EfficiencySeries::from_capture_times(
        ensemble.iter().map(|t| t.capture_time),
        ensemble.len(),
        time_grid,
    )
}

/// Pointwise mean and sample standard deviation across runs.
pub fn aggregate_runs(runs: &[EfficiencySeries]) -> Result<EfficiencySeries> {
    let first = runs.first().ok_or(Error::EmptyEnsemble)?;
    for r in &runs[1..] {
        if r.times.len() != first.times.len()
            || r.times.iter().zip(&first.times).any(|(a, b)| (a - b).abs() > TIME_EPS)
        {
            return Err(Error::Grid("runs do not share a time grid".into()));
        }
    }
    let mut mean = Vec::with_capacity(first.times.len());
    let mut std = Vec::with_capacity(first.times.len());
    for k in 0..first.times.len() {
        let mut acc = MomentAccumulator::default();
        for r in runs {
            acc.push(r.fraction_captured[k]);
        }
        mean.push(acc.mean());
        std.push(acc.std_dev());
    }
    Ok(EfficiencySeries {
        times: first.times.clone(),
        fraction_captured: mean,
        std,
        runs: runs.len(),
    })
}
