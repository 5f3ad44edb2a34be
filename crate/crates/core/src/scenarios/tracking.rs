//! Planar constant-velocity target with position measurements.
//!
//! State is `[pₓ, vₓ, p_y, v_y]`. Each axis is the double integrator
//! `A = [[0, 1], [0, 0]]` driven by a white acceleration held over the step,
//! so its noise column is `[dt²/2, dt]ᵀ` with variance `σ_a²`.

use crate::error::{Error, Result};
use crate::matlib::Matrix;
use crate::statespace::{ContinuousLinearModel, DiscreteLinearModel, MeasurementModel};

use super::rng::NoiseSource;
use super::{check_nonneg, check_positive, Timeline, MIN_MEASUREMENT_VARIANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingParams {
    /// s
    pub dt: f64,
    /// s
    pub duration: f64,
    /// Acceleration noise std dev per axis, m/s².
    pub sigma_a: f64,
    /// Position measurement noise std dev per axis, m.
    pub sigma_pos: f64,
    /// `[pₓ, vₓ, p_y, v_y]` at t = 0.
    pub x0: [f64; 4],
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            duration: 20.0,
            sigma_a: 0.5,
            sigma_pos: 1.0,
            x0: [0.0, 1.0, 0.0, 2.0],
        }
    }
}

impl TrackingParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("dt", self.dt)?;
        check_positive("duration", self.duration)?;
        check_nonneg("sigma_a", self.sigma_a)?;
        check_nonneg("sigma_pos", self.sigma_pos)?;
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("x0", "must be finite"));
        }
        self.timeline().map(|_| ())
    }

    pub(crate) fn timeline(&self) -> Result<Timeline> {
        Timeline::new(self.dt, self.duration, None)
    }

    fn process_model(&self) -> Result<DiscreteLinearModel> {
        let axis = ContinuousLinearModel::new(
            Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]])?,
            Matrix::from_rows(&[[0.0], [1.0]])?,
        )?;
        let (fa, ga) = axis.discretize(self.dt)?;
        let mut f = vec![0.0; 16];
        let mut l = vec![0.0; 8];
        for ax in 0..2 {
            let o = 2 * ax;
            for r in 0..2 {
                for c in 0..2 {
                    f[(o + r) * 4 + o + c] = fa.get(r, c);
                }
                l[(o + r) * 2 + ax] = ga.get(r, 0);
            }
        }
        let var = self.sigma_a * self.sigma_a;
        DiscreteLinearModel::new(
            Matrix::new(4, 4, f)?,
            Matrix::zeros(4, 1),
            Matrix::new(4, 2, l)?,
            Matrix::diag(&[var, var])?,
            self.dt,
        )
    }
}

/// Constant-velocity process model and position-only measurement model.
pub fn build_tracking_models(p: &TrackingParams) -> Result<(DiscreteLinearModel, MeasurementModel)> {
    p.validate()?;
    let var = (p.sigma_pos * p.sigma_pos).max(MIN_MEASUREMENT_VARIANCE);
    let meas = MeasurementModel::with_additive_noise(
        Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])?,
        Matrix::diag(&[var, var])?,
    )?;
    Ok((p.process_model()?, meas))
}

/// Truth trajectory for `steps + 1` instants starting at 0.
pub fn simulate_tracking_truth(p: &TrackingParams, noise_seed: u64) -> Result<Vec<(f64, Vec<f64>)>> {
    p.validate()?;
    let timeline = p.timeline()?;
    let model = p.process_model()?;
    let mut noise = NoiseSource::process(noise_seed);
    let mut x = p.x0.to_vec();
    let mut out = Vec::with_capacity(timeline.steps + 1);
    out.push((timeline.time(0), x.clone()));
    for k in 1..=timeline.steps {
        let w = [noise.normal(p.sigma_a), noise.normal(p.sigma_a)];
        x = model.step(&x, &[0.0], &w)?;
        out.push((timeline.time(k), x.clone()));
    }
    Ok(out)
}
