//! Monte Carlo simulation of non-interacting active particles and their
//! capture by an absorbing target.
//!
//! Four motility models are supported in two and three dimensions: active
//! Brownian particles, run-and-tumble particles, chiral active Brownian
//! particles and passive Brownian particles. Each ensemble is reproducible
//! from a single master seed regardless of the number of worker threads.
//!
//! * [`stochastics`]: per-trajectory random streams
//! * [`analytics`]: Stokes–Einstein coefficients, closed-form and empirical MSD
//! * [`dynamics`]: Euler–Maruyama steppers and trajectory simulation
//! * [`capture`]: absorbing targets and capture-efficiency statistics
//! * [`experiments`]: distance, MSD, angular-speed and 3D scenario runners
//! * [`config`] / [`output`]: config files, CSV tables and run manifests

pub mod analytics;
pub mod capture;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod output;
pub mod stochastics;

pub use analytics::{derive_coefficients, msd_closed_form, MotionCoefficients, PhysicalParams};
pub use error::{Error, Result};
pub use experiments::{Engine, ExperimentConfig, ExperimentKind, ResultTable};
pub use model::{ChiralAxis, Model};
