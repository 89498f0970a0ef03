use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};

use super::{FilterConfig, FilterError};

/// Constant-velocity Kalman filter over `(s, w, ds, dw)`.
///
/// Noise covariances scale with the size and width of the first
/// measurement, so the same config works for small and large boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanSW {
    mean: Vector4<f64>,
    cov: Matrix4<f64>,
    process: Matrix4<f64>,
    measurement: Matrix2<f64>,
}

const TRANSITION: Matrix4<f64> = Matrix4::new(
    1.0, 0.0, 1.0, 0.0, //
    0.0, 1.0, 0.0, 1.0, //
    0.0, 0.0, 1.0, 0.0, //
    0.0, 0.0, 0.0, 1.0,
);

const OBSERVATION: Matrix2x4<f64> = Matrix2x4::new(
    1.0, 0.0, 0.0, 0.0, //
    0.0, 1.0, 0.0, 0.0,
);

impl KalmanSW {
    pub fn new(s: f64, w: f64, cfg: &FilterConfig) -> Result<Self, FilterError> {
        if !(s > 0.0 && w > 0.0 && s.is_finite() && w.is_finite()) {
            return Err(FilterError::InvalidMeasurement(s, w));
        }
        let sq = |x: f64| x * x;
        let (p, v, r) = (cfg.size_process_noise, cfg.size_velocity_noise, cfg.size_measurement_noise);
        let process = Matrix4::from_diagonal(&Vector4::new(sq(p * s), sq(p * w), sq(v * s), sq(v * w)));
        let measurement = Matrix2::from_diagonal(&Vector2::new(sq(r * s), sq(r * w)));
        let cov = Matrix4::from_diagonal(&Vector4::new(
            sq(2.0 * r * s),
            sq(2.0 * r * w),
            sq(10.0 * v * s),
            sq(10.0 * v * w),
        ));
        Ok(Self { mean: Vector4::new(s, w, 0.0, 0.0), cov, process, measurement })
    }

    /// Overrides the state; used by tests and callers restoring a snapshot.
    pub fn with_state(mut self, mean: [f64; 4]) -> Self {
        self.mean = Vector4::from(mean);
        self
    }

    pub fn mean(&self) -> [f64; 4] {
        [self.mean[0], self.mean[1], self.mean[2], self.mean[3]]
    }

    pub fn size(&self) -> f64 {
        self.mean[0]
    }

    pub fn width(&self) -> f64 {
        self.mean[1]
    }

    pub fn covariance(&self) -> &Matrix4<f64> {
        &self.cov
    }

    pub fn predict(&mut self) {
        self.mean = TRANSITION * self.mean;
        self.cov = TRANSITION * self.cov * TRANSITION.transpose() + self.process;
        self.symmetrize();
    }

    pub fn update(&mut self, s: f64, w: f64) -> Result<(), FilterError> {
        if !(s > 0.0 && w > 0.0 && s.is_finite() && w.is_finite()) {
            return Err(FilterError::InvalidMeasurement(s, w));
        }
        let z = Vector2::new(s, w);
        let innovation = z - OBSERVATION * self.mean;
        let innovation_cov = OBSERVATION * self.cov * OBSERVATION.transpose() + self.measurement;
        let inv = innovation_cov
            .cholesky()
            .expect("innovation covariance is positive definite")
            .inverse();
        let gain = self.cov * OBSERVATION.transpose() * inv;
        self.mean += gain * innovation;
        // Joseph form keeps the covariance symmetric positive definite.
        let i_kh = Matrix4::identity() - gain * OBSERVATION;
        self.cov = i_kh * self.cov * i_kh.transpose() + gain * self.measurement * gain.transpose();
        self.symmetrize();
        Ok(())
    }

    fn symmetrize(&mut self) {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cov.cholesky().is_some()
    }
}
