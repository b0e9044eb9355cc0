//! Euler–Maruyama steppers for the four motility models and whole-trajectory
//! simulation.
//!
//! Translation follows `dr = v·ê dt + √(2 D_T dt) ξ` in every model. The
//! heading evolves per model:
//!
//! * ABP, PBP: rotational diffusion, `√(2 D_R dt)` per step.
//! * chiral ABP: deterministic turn `ω dt` followed by the ABP kick.
//! * RTP: with probability `α dt` the heading is replaced by a uniformly
//!   random one; otherwise it is left untouched.
//!
//! In 3D the diffusive kick is applied as a finite rotation by the vector
//! `√(2 D_R dt) ξ`, which keeps the heading on the unit sphere without the
//! first-order decorrelation bias of "add then renormalize".

use log::warn;

use crate::analytics::{MotionCoefficients, PhysicalParams};
use crate::capture::{check_capture, Target};
use crate::error::{Error, Result};
use crate::model::{ChiralAxis, Model};
use crate::stochastics::Stream;

/// Spatial dimension of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn as_u8(self) -> u8 {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn from_u8(d: u8) -> Option<Self> {
        match d {
            2 => Some(Dimension::Two),
            3 => Some(Dimension::Three),
            _ => None,
        }
    }
}

/// Planar particle state. `phi` is not wrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState2D {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub captured_at: Option<f64>,
}

impl ParticleState2D {
    pub fn new(x: f64, y: f64, phi: f64) -> Self {
        Self {
            x,
            y,
            phi,
            captured_at: None,
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, 0.0]
    }
}

/// Spatial particle state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState3D {
    pub position: [f64; 3],
    /// Unit propulsion direction.
    pub heading: [f64; 3],
    /// Unit vector perpendicular to `heading`; the precession axis for
    /// body-frame chirality. Ignored otherwise.
    pub body_axis: [f64; 3],
    pub captured_at: Option<f64>,
}

impl ParticleState3D {
    pub fn new(position: [f64; 3], heading: [f64; 3]) -> Self {
        Self {
            position,
            heading,
            body_axis: any_perpendicular(&heading),
            captured_at: None,
        }
    }
}

/// Per-step parameters with the noise amplitudes precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub model: Model,
    pub dt: f64,
    pub coeffs: MotionCoefficients,
    pub params: PhysicalParams,
    pub chiral_axis: ChiralAxis,
    drift: f64,
    translational_amp: f64,
    rotational_amp: f64,
    turn: f64,
    tumble_probability: f64,
}

impl StepConfig {
    pub fn new(
        model: Model,
        coeffs: MotionCoefficients,
        params: PhysicalParams,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::OutOfRange {
                name: "dt",
                value: dt,
                bound: "must be > 0",
            });
        }
        if coeffs.persistence_time.is_finite() && dt > coeffs.persistence_time / 10.0 {
            warn!(
                "dt = {dt} s exceeds a tenth of the persistence time ({} s)",
                coeffs.persistence_time
            );
        }
        let tumble_probability = params.tumble_rate * dt;
        if model == Model::Rtp && tumble_probability > 1.0 {
            return Err(Error::OutOfRange {
                name: "dt",
                value: dt,
                bound: "tumble_rate * dt must not exceed 1",
            });
        }
        let speed = if model.is_self_propelled() {
            params.speed
        } else {
            0.0
        };
        Ok(Self {
            model,
            dt,
            coeffs,
            params,
            chiral_axis: ChiralAxis::Lab,
            drift: speed * dt,
            translational_amp: (2.0 * coeffs.translational_diffusion * dt).sqrt(),
            rotational_amp: (2.0 * coeffs.rotational_diffusion * dt).sqrt(),
            turn: params.angular_speed * dt,
            tumble_probability,
        })
    }

    pub fn with_chiral_axis(mut self, axis: ChiralAxis) -> Self {
        self.chiral_axis = axis;
        self
    }
}

/// Advances a free planar particle by one step. Captured particles are returned unchanged.
pub fn step_2d(state: &ParticleState2D, cfg: &StepConfig, stream: &mut Stream) -> ParticleState2D {
    let mut next = *state;
    if next.captured_at.is_none() {
        advance_2d(&mut next, cfg, stream);
    }
    next
}

#[inline]
fn advance_2d(s: &mut ParticleState2D, cfg: &StepConfig, stream: &mut Stream) {
    let (sin, cos) = s.phi.sin_cos();
    s.x += cfg.drift * cos + cfg.translational_amp * stream.gaussian();
    s.y += cfg.drift * sin + cfg.translational_amp * stream.gaussian();
    match cfg.model {
        Model::Abp | Model::Pbp => s.phi += cfg.rotational_amp * stream.gaussian(),
        Model::ChiralAbp => s.phi += cfg.turn + cfg.rotational_amp * stream.gaussian(),
        Model::Rtp => {
            if stream.bernoulli(cfg.tumble_probability) {
                s.phi = stream.uniform_angle();
            }
        }
    }
}

/// Advances a free spatial particle by one step. Captured particles are returned unchanged.
pub fn step_3d(
    state: &ParticleState3D,
    cfg: &StepConfig,
    stream: &mut Stream,
) -> Result<ParticleState3D> {
    let norm = norm(&state.heading);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NonUnitHeading(norm));
    }
    let mut next = *state;
    if next.captured_at.is_none() {
        advance_3d(&mut next, cfg, stream);
    }
    Ok(next)
}

#[inline]
fn advance_3d(s: &mut ParticleState3D, cfg: &StepConfig, stream: &mut Stream) {
    for k in 0..3 {
        s.position[k] += cfg.drift * s.heading[k] + cfg.translational_amp * stream.gaussian();
    }
    match cfg.model {
        Model::Abp | Model::Pbp => diffuse_heading(s, cfg, stream),
        Model::ChiralAbp => {
            match cfg.chiral_axis {
                ChiralAxis::Lab => {
                    let w = [0.0, 0.0, cfg.turn];
                    s.heading = rotate(&s.heading, &w);
                    s.body_axis = rotate(&s.body_axis, &w);
                }
                ChiralAxis::Body => {
                    let w = scale(&s.body_axis, cfg.turn);
                    s.heading = rotate(&s.heading, &w);
                }
            }
            diffuse_heading(s, cfg, stream);
        }
        Model::Rtp => {
            if stream.bernoulli(cfg.tumble_probability) {
                s.heading = stream.unit_vector();
                s.body_axis = any_perpendicular(&s.heading);
            }
        }
    }
    s.heading = normalized(&s.heading);
    if cfg.model == Model::ChiralAbp && cfg.chiral_axis == ChiralAxis::Body {
        let along = dot(&s.body_axis, &s.heading);
        let axis = [
            s.body_axis[0] - along * s.heading[0],
            s.body_axis[1] - along * s.heading[1],
            s.body_axis[2] - along * s.heading[2],
        ];
        s.body_axis = normalized(&axis);
    }
}

// Isotropic rotational diffusion of the whole body frame.
#[inline]
fn diffuse_heading(s: &mut ParticleState3D, cfg: &StepConfig, stream: &mut Stream) {
    let w = [
        cfg.rotational_amp * stream.gaussian(),
        cfg.rotational_amp * stream.gaussian(),
        cfg.rotational_amp * stream.gaussian(),
    ];
    s.heading = rotate(&s.heading, &w);
    s.body_axis = rotate(&s.body_axis, &w);
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn scale(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
fn normalized(a: &[f64; 3]) -> [f64; 3] {
    scale(a, 1.0 / norm(a))
}

/// Rotates `x` by the rotation vector `w` (axis `w/|w|`, angle `|w|`).
#[inline]
fn rotate(x: &[f64; 3], w: &[f64; 3]) -> [f64; 3] {
    let angle = norm(w);
    if angle == 0.0 {
        return *x;
    }
    let k = scale(w, 1.0 / angle);
    let (sin, cos) = angle.sin_cos();
    let kx = cross(&k, x);
    let along = dot(&k, x) * (1.0 - cos);
    [
        x[0] * cos + kx[0] * sin + k[0] * along,
        x[1] * cos + kx[1] * sin + k[1] * along,
        x[2] * cos + kx[2] * sin + k[2] * along,
    ]
}

fn any_perpendicular(h: &[f64; 3]) -> [f64; 3] {
    let helper = if h[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    normalized(&cross(h, &helper))
}

/// Positions recorded on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub record_times: Vec<f64>,
    /// Positions at `record_times`; `z` is zero for planar runs.
    pub positions: Vec<[f64; 3]>,
    pub capture_time: Option<f64>,
}

/// Number of whole steps of size `dt` in `span`, if it is (nearly) an integer.
fn whole_steps(span: f64, dt: f64) -> Option<u64> {
    let r = span / dt;
    let n = r.round();
    ((r - n).abs() <= 1e-6 * n.max(1.0) && n >= 0.0).then_some(n as u64)
}

/// Step counts for a run: `(total steps, steps between records)`.
pub fn step_grid(t_total: f64, record_every: f64, dt: f64) -> Result<(u64, u64)> {
    if !(t_total >= 0.0 && t_total.is_finite()) {
        return Err(Error::OutOfRange {
            name: "t_total",
            value: t_total,
            bound: "must be >= 0",
        });
    }
    let stride = whole_steps(record_every, dt)
        .filter(|&s| s >= 1)
        .ok_or_else(|| {
            Error::Grid(format!(
                "record_every = {record_every} s is not a positive multiple of dt = {dt} s"
            ))
        })?;
    let total = whole_steps(t_total, dt)
        .ok_or_else(|| Error::Grid(format!("t_total = {t_total} s is not a multiple of dt = {dt} s")))?;
    if total % stride != 0 {
        return Err(Error::Grid(format!(
            "t_total = {t_total} s is not a multiple of record_every = {record_every} s"
        )));
    }
    Ok((total, stride))
}

/// Common interface of the planar and spatial walkers.
trait Walker {
    fn position(&self) -> [f64; 3];
    fn advance(&mut self, cfg: &StepConfig, stream: &mut Stream);
}

struct Planar(ParticleState2D);

impl Planar {
    fn release(at: [f64; 3], stream: &mut Stream) -> Self {
        Planar(ParticleState2D::new(at[0], at[1], stream.uniform_angle()))
    }
}

impl Walker for Planar {
    #[inline]
    fn position(&self) -> [f64; 3] {
        self.0.position()
    }

    #[inline]
    fn advance(&mut self, cfg: &StepConfig, stream: &mut Stream) {
        advance_2d(&mut self.0, cfg, stream)
    }
}

struct Spatial(ParticleState3D);

impl Spatial {
    fn release(at: [f64; 3], cfg: &StepConfig, stream: &mut Stream) -> Self {
        let heading = stream.unit_vector();
        let mut state = ParticleState3D::new(at, heading);
        if cfg.model == Model::ChiralAbp && cfg.chiral_axis == ChiralAxis::Body {
            // random body axis in the plane perpendicular to the heading
            let e1 = state.body_axis;
            let e2 = cross(&heading, &e1);
            let (sin, cos) = stream.uniform_angle().sin_cos();
            state.body_axis = normalized(&[
                e1[0] * cos + e2[0] * sin,
                e1[1] * cos + e2[1] * sin,
                e1[2] * cos + e2[2] * sin,
            ]);
        }
        Spatial(state)
    }
}

impl Walker for Spatial {
    #[inline]
    fn position(&self) -> [f64; 3] {
        self.0.position
    }

    #[inline]
    fn advance(&mut self, cfg: &StepConfig, stream: &mut Stream) {
        advance_3d(&mut self.0, cfg, stream)
    }
}

// Steps a walker `n_steps` times, checking capture after every step and
// calling `observe(step, position)` at step 0 and after each step. When
// `stop_on_capture` is set the loop ends at capture; otherwise the frozen
// position keeps being reported. Returns the capture step.
fn integrate<W: Walker>(
    walker: &mut W,
    n_steps: u64,
    cfg: &StepConfig,
    target: Option<&Target>,
    stream: &mut Stream,
    stop_on_capture: bool,
    mut observe: impl FnMut(u64, [f64; 3]),
) -> Option<u64> {
    let mut pos = walker.position();
    observe(0, pos);
    let mut captured = target.and_then(|t| check_capture(&pos, &pos, t)).map(|_| 0);
    for k in 1..=n_steps {
        if captured.is_some() {
            if stop_on_capture {
                break;
            }
        } else {
            let prev = pos;
            walker.advance(cfg, stream);
            pos = walker.position();
            if let Some(t) = target {
                if let Some(point) = check_capture(&prev, &pos, t) {
                    pos = point;
                    captured = Some(k);
                }
            }
        }
        observe(k, pos);
    }
    captured
}

/// Simulates one particle released at `release` with a uniformly random
/// initial orientation, recording its position every `record_every` seconds.
///
/// With a target the particle is absorbed at the first step that ends inside
/// it and stays there; recording continues on the full grid.
pub fn simulate_trajectory(
    release: [f64; 3],
    t_total: f64,
    record_every: f64,
    cfg: &StepConfig,
    dimension: Dimension,
    target: Option<&Target>,
    stream: &mut Stream,
) -> Result<Trajectory> {
    let (n_steps, stride) = step_grid(t_total, record_every, cfg.dt)?;
    let n_records = (n_steps / stride + 1) as usize;
    let mut positions = Vec::with_capacity(n_records);
    let record = |k: u64, p: [f64; 3]| {
        if k.is_multiple_of(stride) {
            positions.push(p);
        }
    };
    let capture = match dimension {
        Dimension::Two => {
            let mut w = Planar::release(release, stream);
            integrate(&mut w, n_steps, cfg, target, stream, false, record)
        }
        Dimension::Three => {
            let mut w = Spatial::release(release, cfg, stream);
            integrate(&mut w, n_steps, cfg, target, stream, false, record)
        }
    };
    Ok(Trajectory {
        record_times: (0..n_records).map(|i| i as f64 * record_every).collect(),
        positions,
        capture_time: capture.map(|k| k as f64 * cfg.dt),
    })
}

/// Step index at which a particle released at `release` is absorbed within
/// `n_steps`, or `None`.
///
/// Consumes the stream exactly as [`simulate_trajectory`] does, so the
/// result agrees with that function's `capture_time` for the same stream.
pub fn capture_step(
    release: [f64; 3],
    n_steps: u64,
    cfg: &StepConfig,
    dimension: Dimension,
    target: &Target,
    stream: &mut Stream,
) -> Option<u64> {
    match dimension {
        Dimension::Two => {
            let mut w = Planar::release(release, stream);
            integrate(&mut w, n_steps, cfg, Some(target), stream, true, |_, _| {})
        }
        Dimension::Three => {
            let mut w = Spatial::release(release, cfg, stream);
            integrate(&mut w, n_steps, cfg, Some(target), stream, true, |_, _| {})
        }
    }
}

/// Squared displacement from the release point at every `stride`-th step of
/// a free particle, appended to `out`.
pub(crate) fn free_squared_displacements(
    n_steps: u64,
    stride: u64,
    cfg: &StepConfig,
    dimension: Dimension,
    stream: &mut Stream,
    out: &mut Vec<f64>,
) {
    let record = |k: u64, p: [f64; 3]| {
        if k.is_multiple_of(stride) {
            out.push(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
    };
    match dimension {
        Dimension::Two => {
            let mut w = Planar::release([0.0; 3], stream);
            integrate(&mut w, n_steps, cfg, None, stream, false, record);
        }
        Dimension::Three => {
            let mut w = Spatial::release([0.0; 3], cfg, stream);
            integrate(&mut w, n_steps, cfg, None, stream, false, record);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::derive_coefficients;
    use crate::stochastics::{derive_stream, SeedSpec};
    use std::f64::consts::{PI, TAU};

    fn cfg_with(model: Model, d_t: f64, d_r: f64, v: f64, omega: f64, alpha: f64, dt: f64) -> StepConfig {
        let coeffs = MotionCoefficients::from_diffusion(d_t, d_r, v).unwrap();
        let params = PhysicalParams {
            speed: v,
            angular_speed: omega,
            tumble_rate: alpha,
            ..PhysicalParams::default()
        };
        StepConfig::new(model, coeffs, params, dt).unwrap()
    }

    fn paper_cfg(model: Model) -> StepConfig {
        let p = PhysicalParams::default();
        StepConfig::new(model, derive_coefficients(&p).unwrap(), p, 0.01).unwrap()
    }

    #[test]
    fn noise_free_abp_moves_straight() {
        let cfg = cfg_with(Model::Abp, 0.0, 0.0, 10.0, 0.0, 0.0, 0.01);
        let mut s = derive_stream(SeedSpec::new(1, 0, 0));
        let next = step_2d(&ParticleState2D::new(0.0, 0.0, 0.0), &cfg, &mut s);
        assert_eq!((next.x, next.y, next.phi), (0.1, 0.0, 0.0));
    }

    #[test]
    fn noise_free_chiral_traces_circle() {
        let dt = 1e-3;
        let cfg = cfg_with(Model::ChiralAbp, 0.0, 0.0, 10.0, 1.0, 0.0, dt);
        let mut s = derive_stream(SeedSpec::new(1, 0, 0));
        let mut st = ParticleState2D::new(0.0, 0.0, 0.0);
        // centre of the circle is at (0, v/ω) for an initial heading along +x
        let n = (TAU / dt).round() as usize;
        let mut max_dev: f64 = 0.0;
        for _ in 0..n {
            st = step_2d(&st, &cfg, &mut s);
            let r = (st.x.powi(2) + (st.y - 10.0).powi(2)).sqrt();
            max_dev = max_dev.max((r - 10.0).abs());
        }
        assert!(max_dev < 0.02, "radius deviation {max_dev}");
        let miss = (st.x.powi(2) + st.y.powi(2)).sqrt();
        assert!(miss < 10.0 * dt * 10.0, "returned within {miss}");
        assert!((st.phi - n as f64 * dt).abs() < 1e-9);
    }

    #[test]
    fn rtp_tumble_count_is_binomial() {
        // α dt = 0.01
        let cfg = cfg_with(Model::Rtp, 0.0, 0.0, 10.0, 0.0, 1.0, 0.01);
        let mut s = derive_stream(SeedSpec::new(9, 0, 0));
        let mut st = ParticleState2D::new(0.0, 0.0, 0.5);
        let mut tumbles = 0;
        for _ in 0..100_000 {
            let next = step_2d(&st, &cfg, &mut s);
            if next.phi != st.phi {
                tumbles += 1;
            }
            st = next;
        }
        // mean 1000, binomial sd ≈ 31.5
        assert!((900..=1100).contains(&tumbles), "{tumbles} tumbles");
    }

    #[test]
    fn rtp_has_no_rotational_diffusion_between_tumbles() {
        let cfg = cfg_with(Model::Rtp, 0.4, 1.3, 10.0, 0.0, 0.0, 0.01);
        let mut s = derive_stream(SeedSpec::new(2, 0, 0));
        let mut st = ParticleState2D::new(0.0, 0.0, 1.0);
        for _ in 0..1000 {
            st = step_2d(&st, &cfg, &mut s);
        }
        assert_eq!(st.phi, 1.0);
    }

    #[test]
    fn pbp_ignores_speed() {
        let cfg = cfg_with(Model::Pbp, 0.0, 1.0, 10.0, 0.0, 0.0, 0.01);
        let mut s = derive_stream(SeedSpec::new(2, 0, 0));
        let st = step_2d(&ParticleState2D::new(0.0, 0.0, 0.0), &cfg, &mut s);
        assert_eq!((st.x, st.y), (0.0, 0.0));
    }

    #[test]
    fn captured_state_is_frozen() {
        let cfg = paper_cfg(Model::Abp);
        let mut s = derive_stream(SeedSpec::new(2, 0, 0));
        let mut st = ParticleState2D::new(1.0, 2.0, 0.3);
        st.captured_at = Some(0.5);
        assert_eq!(step_2d(&st, &cfg, &mut s), st);
    }

    #[test]
    fn noise_free_3d_step() {
        let cfg = cfg_with(Model::Abp, 0.0, 0.0, 10.0, 0.0, 0.0, 0.01);
        let mut s = derive_stream(SeedSpec::new(1, 0, 0));
        let st = ParticleState3D::new([0.0; 3], [0.0, 0.0, 1.0]);
        let next = step_3d(&st, &cfg, &mut s).unwrap();
        assert_eq!(next.position, [0.0, 0.0, 0.1]);
    }

    #[test]
    fn non_unit_heading_rejected() {
        let cfg = paper_cfg(Model::Abp);
        let mut s = derive_stream(SeedSpec::new(1, 0, 0));
        let st = ParticleState3D::new([0.0; 3], [0.0, 0.0, 1.1]);
        assert!(matches!(step_3d(&st, &cfg, &mut s), Err(Error::NonUnitHeading(_))));
    }

    #[test]
    fn heading_stays_unit_over_many_steps() {
        for (model, axis) in [
            (Model::Abp, ChiralAxis::Lab),
            (Model::ChiralAbp, ChiralAxis::Lab),
            (Model::ChiralAbp, ChiralAxis::Body),
            (Model::Rtp, ChiralAxis::Lab),
        ] {
            let cfg = paper_cfg(model).with_chiral_axis(axis);
            let mut s = derive_stream(SeedSpec::new(4, 0, 0));
            let mut st = ParticleState3D::new([0.0; 3], [0.0, 0.0, 1.0]);
            let steps = if model == Model::Abp { 1_000_000 } else { 100_000 };
            for _ in 0..steps {
                advance_3d(&mut st, &cfg, &mut s);
            }
            assert!((norm(&st.heading) - 1.0).abs() < 1e-9, "{model}");
            if axis == ChiralAxis::Body {
                assert!(dot(&st.heading, &st.body_axis).abs() < 1e-9);
                assert!((norm(&st.body_axis) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_free_lab_chiral_precesses_about_z() {
        let cfg = cfg_with(Model::ChiralAbp, 0.0, 0.0, 10.0, 1.0, 0.0, 1e-3)
            .with_chiral_axis(ChiralAxis::Lab);
        let mut s = derive_stream(SeedSpec::new(1, 0, 0));
        let h0 = normalized(&[1.0, 0.0, 1.0]);
        let mut st = ParticleState3D::new([0.0; 3], h0);
        for _ in 0..(PI / 1e-3).round() as usize {
            st = step_3d(&st, &cfg, &mut s).unwrap();
        }
        // half a turn about z flips the in-plane component
        assert!((st.heading[0] + h0[0]).abs() < 1e-3);
        assert!((st.heading[2] - h0[2]).abs() < 1e-12);
    }

    #[test]
    fn rotate_matches_quarter_turn() {
        let r = rotate(&[1.0, 0.0, 0.0], &[0.0, 0.0, PI / 2.0]);
        assert!((r[0]).abs() < 1e-15 && (r[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_arithmetic() {
        assert_eq!(step_grid(5.0, 0.05, 0.01).unwrap(), (500, 5));
        assert!(matches!(step_grid(5.0, 0.015, 0.01), Err(Error::Grid(_))));
        assert!(matches!(step_grid(5.0, 0.0, 0.01), Err(Error::Grid(_))));
        assert!(matches!(step_grid(5.02, 0.05, 0.01), Err(Error::Grid(_))));
    }

    #[test]
    fn trajectory_records_full_grid() {
        let cfg = paper_cfg(Model::Abp);
        let mut s = derive_stream(SeedSpec::new(1, 0, 0));
        let t = simulate_trajectory([0.0; 3], 5.0, 0.05, &cfg, Dimension::Two, None, &mut s).unwrap();
        assert_eq!(t.record_times.len(), 101);
        assert_eq!(t.positions.len(), 101);
        assert_eq!(t.positions[0], [0.0; 3]);
        assert!((t.record_times[100] - 5.0).abs() < 1e-12);
        assert_eq!(t.capture_time, None);
    }

    #[test]
    fn release_inside_target_is_captured_at_once() {
        let cfg = paper_cfg(Model::ChiralAbp);
        let target = Target::on_x_axis(2.0, 5.0).unwrap();
        for dim in [Dimension::Two, Dimension::Three] {
            let mut s = derive_stream(SeedSpec::new(1, 0, 0));
            let t = simulate_trajectory([0.0; 3], 1.0, 0.1, &cfg, dim, Some(&target), &mut s).unwrap();
            assert_eq!(t.capture_time, Some(0.0));
            assert!(t.positions.iter().all(|p| *p == [0.0; 3]));
        }
    }

    #[test]
    fn trajectory_is_deterministic() {
        let cfg = paper_cfg(Model::Rtp);
        let target = Target::on_x_axis(7.78, 5.0).unwrap();
        let run = || {
            let mut s = derive_stream(SeedSpec::new(42, 3, 17));
            simulate_trajectory([0.0; 3], 5.0, 0.05, &cfg, Dimension::Two, Some(&target), &mut s).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn capture_step_agrees_with_trajectory() {
        let target = Target::on_x_axis(7.78, 5.0).unwrap();
        for model in [Model::Abp, Model::Rtp, Model::ChiralAbp] {
            for dim in [Dimension::Two, Dimension::Three] {
                let cfg = paper_cfg(model);
                for i in 0..50 {
                    let spec = SeedSpec::new(5, 0, i);
                    let traj = simulate_trajectory(
                        [0.0; 3], 5.0, 0.05, &cfg, dim, Some(&target), &mut derive_stream(spec),
                    )
                    .unwrap();
                    let k = capture_step([0.0; 3], 500, &cfg, dim, &target, &mut derive_stream(spec));
                    assert_eq!(traj.capture_time, k.map(|k| k as f64 * 0.01));
                    if let Some(tc) = traj.capture_time {
                        // frozen after capture
                        let first = traj.record_times.iter().position(|&t| t >= tc).unwrap();
                        assert!(traj.positions[first..].windows(2).all(|w| w[0] == w[1]));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_dt() {
        let p = PhysicalParams::default();
        let c = derive_coefficients(&p).unwrap();
        assert!(StepConfig::new(Model::Abp, c, p, 0.0).is_err());
        assert!(StepConfig::new(Model::Abp, c, p, -1.0).is_err());
        let fast = PhysicalParams { tumble_rate: 200.0, ..p };
        assert!(StepConfig::new(Model::Rtp, c, fast, 0.01).is_err());
    }
}
