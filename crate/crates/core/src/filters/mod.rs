//! Per-track state estimation: a flow-driven particle filter for the box
//! center and a constant-velocity Kalman filter for box size and width.

mod kalman;
mod particle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kalman::KalmanSW;
pub use particle::{ParticleSet, UpdateOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("invalid velocity ({0}, {1})")]
    InvalidVelocity(f64, f64),
    #[error("invalid measurement: size {0}, width {1}")]
    InvalidMeasurement(f64, f64),
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
}

/// Filter constants. None of these come with the method; the defaults are
/// recorded in every run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub n_particles: usize,
    /// Per-axis particle jitter (px) applied at init and on every predict.
    pub process_sigma: f64,
    /// Observation noise (px) of the particle likelihood.
    pub meas_sigma: f64,
    /// Resample when the effective sample size drops below this fraction of N.
    pub resample_threshold: f64,
    /// Per-frame process noise of size and width, as a fraction of their
    /// initial values.
    pub size_process_noise: f64,
    /// Per-frame process noise of the size/width velocities, same scaling.
    pub size_velocity_noise: f64,
    /// Measurement noise of size and width, same scaling.
    pub size_measurement_noise: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 100,
            process_sigma: 5.0,
            meas_sigma: 10.0,
            resample_threshold: 0.5,
            size_process_noise: 0.05,
            size_velocity_noise: 0.005,
            size_measurement_noise: 0.05,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |m: &str| Err(FilterError::InvalidConfig(m.to_string()));
        if self.n_particles == 0 {
            return bad("n_particles must be positive");
        }
        if !(self.process_sigma >= 0.0 && self.process_sigma.is_finite()) {
            return bad("process_sigma must be non-negative");
        }
        if !(self.meas_sigma > 0.0 && self.meas_sigma.is_finite()) {
            return bad("meas_sigma must be positive");
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return bad("resample_threshold must be in (0, 1]");
        }
        for (name, v) in [
            ("size_process_noise", self.size_process_noise),
            ("size_velocity_noise", self.size_velocity_noise),
            ("size_measurement_noise", self.size_measurement_noise),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FilterError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}
