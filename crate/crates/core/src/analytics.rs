//! Physical coefficients and mean-squared-displacement machinery.
//!
//! All quantities are in simulation units: micrometres, seconds and radians.
//! Stokes–Einstein relations are evaluated in SI once and converted.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::{ChiralAxis, Model};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_648_52e-23;

/// Room temperature used when none is given, K.
pub const DEFAULT_TEMPERATURE: f64 = 293.0;

/// Dynamic viscosity of water, Pa·s.
pub const WATER_VISCOSITY: f64 = 1.0016e-3;

const M2_TO_UM2: f64 = 1e12;

/// Raw physical inputs from which the motion coefficients derive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Particle radius, μm.
    pub particle_radius: f64,
    /// Absolute temperature, K.
    pub temperature: f64,
    /// Fluid viscosity, Pa·s.
    pub viscosity: f64,
    /// Self-propulsion speed, μm/s.
    pub speed: f64,
    /// Chiral angular speed, rad/s.
    pub angular_speed: f64,
    /// Tumble rate, 1/s.
    pub tumble_rate: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        let mut p = Self {
            particle_radius: 0.5,
            temperature: DEFAULT_TEMPERATURE,
            viscosity: WATER_VISCOSITY,
            speed: 10.0,
            angular_speed: 1.0,
            tumble_rate: 0.0,
        };
        // tumble rate matches the rotational diffusion rate
        p.tumble_rate = rotational_diffusion(p.particle_radius, p.temperature, p.viscosity);
        p
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        positive("particle_radius", self.particle_radius)?;
        positive("temperature", self.temperature)?;
        positive("viscosity", self.viscosity)?;
        non_negative("speed", self.speed)?;
        non_negative("tumble_rate", self.tumble_rate)?;
        if !self.angular_speed.is_finite() {
            return Err(Error::OutOfRange {
                name: "angular_speed",
                value: self.angular_speed,
                bound: "must be finite",
            });
        }
        Ok(())
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            bound: "must be > 0",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            bound: "must be >= 0",
        })
    }
}

fn translational_diffusion(radius_um: f64, temperature: f64, viscosity: f64) -> f64 {
    let r = radius_um * 1e-6;
    BOLTZMANN * temperature / (6.0 * PI * viscosity * r) * M2_TO_UM2
}

fn rotational_diffusion(radius_um: f64, temperature: f64, viscosity: f64) -> f64 {
    let r = radius_um * 1e-6;
    BOLTZMANN * temperature / (8.0 * PI * viscosity * r * r * r)
}

/// Diffusion constants and the persistence scales they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCoefficients {
    /// D_T, μm²/s.
    pub translational_diffusion: f64,
    /// D_R, rad²/s.
    pub rotational_diffusion: f64,
    /// v / D_R, μm.
    pub persistence_length: f64,
    /// 1 / D_R, s.
    pub persistence_time: f64,
}

impl MotionCoefficients {
    /// Builds coefficients directly from diffusion constants.
    ///
    /// Zero diffusion is allowed so that noise-free limits can be simulated;
    /// the persistence scales are then infinite.
    pub fn from_diffusion(translational: f64, rotational: f64, speed: f64) -> Result<Self> {
        non_negative("translational_diffusion", translational)?;
        non_negative("rotational_diffusion", rotational)?;
        non_negative("speed", speed)?;
        Ok(Self {
            translational_diffusion: translational,
            rotational_diffusion: rotational,
            persistence_length: speed / rotational,
            persistence_time: 1.0 / rotational,
        })
    }
}

/// Stokes–Einstein translational and rotational diffusion of a sphere.
pub fn derive_coefficients(p: &PhysicalParams) -> Result<MotionCoefficients> {
    p.validate()?;
    let d_t = translational_diffusion(p.particle_radius, p.temperature, p.viscosity);
    let d_r = rotational_diffusion(p.particle_radius, p.temperature, p.viscosity);
    MotionCoefficients::from_diffusion(d_t, d_r, p.speed)
}

/// `∫₀ᵗ (t − s) e^{−γ s} ds` for `γ ≥ 0`, accurate for small `γt`.
fn persistent_integral(rate: f64, t: f64) -> f64 {
    let x = rate * t;
    if x < 1e-4 {
        t * t * (0.5 - x / 6.0 + x * x / 24.0)
    } else {
        (x + (-x).exp_m1()) / (rate * rate)
    }
}

/// `∫₀ᵗ (t − s) e^{−z s} ds` for complex `z` with `Re z ≥ 0`.
fn oscillating_integral(z: Complex64, t: f64) -> f64 {
    let zt = z * t;
    if zt.norm() < 1e-4 {
        return (t * t * (0.5 - zt / 6.0 + zt * zt / 24.0)).re;
    }
    ((zt - 1.0 + (-zt).exp()) / (z * z)).re
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "t",
            value: t,
            bound: "must be >= 0",
        })
    }
}

/// Closed-form planar MSD of `model` at time `t`.
pub fn msd_closed_form(
    model: Model,
    coeffs: &MotionCoefficients,
    params: &PhysicalParams,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    let d_t = coeffs.translational_diffusion;
    let d_r = coeffs.rotational_diffusion;
    let v = params.speed;
    let diffusive = 4.0 * d_t * t;
    Ok(match model {
        Model::Pbp => diffusive,
        Model::Abp => diffusive + 2.0 * v * v * persistent_integral(d_r, t),
        Model::Rtp => diffusive + 2.0 * v * v * persistent_integral(params.tumble_rate, t),
        Model::ChiralAbp => diffusive + chiral_planar_term(v, d_r, params.angular_speed, t),
    })
}

// Active part of the chiral MSD, written in terms of the phase φ₀ with
// cos φ₀ = (D²−ω²)/(D²+ω²) and sin φ₀ = 2Dω/(D²+ω²) ≥ 0.
fn chiral_planar_term(v: f64, d_r: f64, omega: f64, t: f64) -> f64 {
    let omega = omega.abs();
    let denom = d_r * d_r + omega * omega;
    if omega == 0.0 || denom * t * t < 1e-8 {
        // Achiral limit (or too early for the phase form to be accurate).
        return 2.0 * v * v * oscillating_integral(Complex64::new(d_r, -omega), t);
    }
    let cos_phi0 = (d_r * d_r - omega * omega) / denom;
    let sin_phi0 = 2.0 * d_r * omega / denom;
    let phi0 = sin_phi0.atan2(cos_phi0);
    2.0 * v * v * d_r * t / denom
        + 2.0 * v * v * ((-d_r * t).exp() * (omega * t + phi0).cos() - cos_phi0) / denom
}

/// Closed-form MSD in three dimensions.
///
/// The heading autocorrelation decays as `e^{−2 D_R t}` for rotational
/// diffusion on the sphere and as `e^{−α t}` for complete tumbles. Chiral
/// precession multiplies it by `cos ωt` (body axis) or by the isotropic
/// average `(2 cos ωt + 1)/3` (lab axis).
pub fn msd_closed_form_3d(
    model: Model,
    coeffs: &MotionCoefficients,
    params: &PhysicalParams,
    axis: ChiralAxis,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    let d_t = coeffs.translational_diffusion;
    let decay = 2.0 * coeffs.rotational_diffusion;
    let v = params.speed;
    let diffusive = 6.0 * d_t * t;
    Ok(match model {
        Model::Pbp => diffusive,
        Model::Abp => diffusive + 2.0 * v * v * persistent_integral(decay, t),
        Model::Rtp => diffusive + 2.0 * v * v * persistent_integral(params.tumble_rate, t),
        Model::ChiralAbp => {
            let z = Complex64::new(decay, -params.angular_speed.abs());
            let rotating = oscillating_integral(z, t);
            let active = match axis {
                ChiralAxis::Body => rotating,
                ChiralAxis::Lab => {
                    (2.0 * rotating + persistent_integral(decay, t)) / 3.0
                }
            };
            diffusive + 2.0 * v * v * active
        }
    })
}

/// MSD sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error of each value; empty for closed-form series.
    pub stderr: Vec<f64>,
}

impl MsdSeries {
    /// Evaluates the planar closed form on `times`.
    pub fn closed_form(
        model: Model,
        coeffs: &MotionCoefficients,
        params: &PhysicalParams,
        times: &[f64],
    ) -> Result<Self> {
        let values = times
            .iter()
            .map(|&t| msd_closed_form(model, coeffs, params, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.to_vec(),
            values,
            stderr: Vec::new(),
        })
    }
}

/// Index of `t` on a uniform grid, or `None` if it is not a grid point.
pub(crate) fn grid_index(grid: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    let pos = grid.partition_point(|&g| g < t - tol);
    (pos < grid.len() && (grid[pos] - t).abs() <= tol).then_some(pos)
}

/// Ensemble MSD, `⟨|r(t) − r(0)|²⟩`, of free trajectories at `sample_times`.
///
/// Trajectories are reduced in slice order, so the result does not depend on
/// how they were produced.
pub fn empirical_msd(trajectories: &[Trajectory], sample_times: &[f64]) -> Result<MsdSeries> {
    if trajectories.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = trajectories.len() as f64;
    let mut values = Vec::with_capacity(sample_times.len());
    let mut stderr = Vec::with_capacity(sample_times.len());
    let mut indices = Vec::with_capacity(trajectories.len());
    for &t in sample_times {
        indices.clear();
        for traj in trajectories {
            let k = grid_index(&traj.record_times, t).ok_or(Error::TimeNotOnGrid(t))?;
            indices.push(k);
        }
        let mut acc = MomentAccumulator::default();
        for (traj, &k) in trajectories.iter().zip(&indices) {
            acc.push(squared_distance(&traj.positions[k], &traj.positions[0]));
        }
        values.push(acc.mean());
        stderr.push(acc.std_dev() / n.sqrt());
    }
    Ok(MsdSeries {
        times: sample_times.to_vec(),
        values,
        stderr,
    })
}

pub(crate) fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MomentAccumulator {
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn count(&self) -> u64 {
        self.count
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation; zero for fewer than two samples.
    pub(crate) fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0).sqrt()
        }
    }
}
