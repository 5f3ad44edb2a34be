//! Simple pendulum: nonlinear truth, linearized filter models.
//!
//! Truth follows `θ̈ = −(g/l) sin θ + τ/(m l²)` integrated with fixed-step
//! RK4, with the random torque `τ ~ N(0, σ_r²)` redrawn each step and held
//! across it. The filter uses the small-angle model `A = [[0, 1], [−g/l, 0]]`
//! discretized exactly, with torque noise entering the rate state only.

use crate::error::{Error, Result};
use crate::matlib::Matrix;
use crate::statespace::{ContinuousLinearModel, DiscreteLinearModel, MeasurementModel};

use super::rng::NoiseSource;
use super::{check_nonneg, check_positive, Timeline, MIN_MEASUREMENT_VARIANCE};

/// How the truth trajectory is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthModel {
    /// RK4 on the full `sin θ` dynamics.
    Nonlinear,
    /// The filter's own discrete model, `x ← F x + [0, 1]ᵀ w`.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    /// m/s²
    pub gravity: f64,
    /// m
    pub length: f64,
    /// kg
    pub mass: f64,
    /// rad
    pub theta0: f64,
    /// rad/s
    pub theta_dot0: f64,
    /// Torque noise std dev driving the truth, N·m.
    pub sigma_r: f64,
    /// Torque noise std dev assumed by the filter; `None` means `sigma_r`.
    pub filter_sigma_r: Option<f64>,
    /// Angle measurement noise std dev, rad.
    pub sigma_o: f64,
    /// Integration / prediction step, s.
    pub dt: f64,
    /// s
    pub duration: f64,
    /// Measurement rate, Hz.
    pub rate_hz: f64,
    pub truth: TruthModel,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            length: 1.0,
            mass: 1.0,
            theta0: 10f64.to_radians(),
            theta_dot0: 0.0,
            sigma_r: 0.5,
            filter_sigma_r: None,
            sigma_o: 0.05,
            dt: 0.01,
            duration: 10.0,
            rate_hz: 10.0,
            truth: TruthModel::Nonlinear,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("gravity", self.gravity)?;
        check_positive("length", self.length)?;
        check_positive("mass", self.mass)?;
        check_positive("dt", self.dt)?;
        check_positive("duration", self.duration)?;
        check_positive("rate_hz", self.rate_hz)?;
        check_nonneg("sigma_r", self.sigma_r)?;
        check_nonneg("sigma_o", self.sigma_o)?;
        if let Some(s) = self.filter_sigma_r {
            check_nonneg("filter_sigma_r", s)?;
        }
        for (what, v) in [("theta0", self.theta0), ("theta_dot0", self.theta_dot0)] {
            if !v.is_finite() {
                return Err(Error::domain(what, "must be finite"));
            }
        }
        self.timeline().map(|_| ())
    }

    pub(crate) fn timeline(&self) -> Result<Timeline> {
        Timeline::new(self.dt, self.duration, Some(self.rate_hz))
    }

    pub fn filter_sigma_r(&self) -> f64 {
        self.filter_sigma_r.unwrap_or(self.sigma_r)
    }

    /// `g / l`, the squared small-angle natural frequency.
    pub fn omega_squared(&self) -> f64 {
        self.gravity / self.length
    }

    fn inertia(&self) -> f64 {
        self.mass * self.length * self.length
    }

    pub fn continuous_model(&self) -> Result<ContinuousLinearModel> {
        ContinuousLinearModel::new(
            Matrix::from_rows(&[[0.0, 1.0], [-self.omega_squared(), 0.0]])?,
            Matrix::from_rows(&[[0.0], [1.0 / self.inertia()]])?,
        )
    }

    /// Discrete process model whose torque noise has std dev `sigma_r`.
    fn process_model(&self, sigma_r: f64) -> Result<DiscreteLinearModel> {
        let (f, g) = self.continuous_model()?.discretize(self.dt)?;
        let l = Matrix::from_rows(&[[0.0], [1.0]])?;
        let rate_std = self.dt * sigma_r / self.inertia();
        DiscreteLinearModel::new(f, g, l, Matrix::diag(&[rate_std * rate_std])?, self.dt)
    }
}

/// Filter models: `F = e^{A·dt}`, `L = [0, 1]ᵀ`,
/// `Q = (dt·σ_r / (m l²))²`, `H = [1, 0]`, `R = σ_o²`.
///
/// `σ_r` is the filter's value; `R` is floored at
/// [`MIN_MEASUREMENT_VARIANCE`].
pub fn build_pendulum_models(p: &PendulumParams) -> Result<(DiscreteLinearModel, MeasurementModel)> {
    p.validate()?;
    let process = p.process_model(p.filter_sigma_r())?;
    let var = (p.sigma_o * p.sigma_o).max(MIN_MEASUREMENT_VARIANCE);
    let meas = MeasurementModel::with_additive_noise(
        Matrix::from_rows(&[[1.0, 0.0]])?,
        Matrix::diag(&[var])?,
    )?;
    Ok((process, meas))
}

/// Truth trajectory `(t, [θ, θ̇])` for `steps + 1` instants starting at 0.
pub fn simulate_pendulum_truth(p: &PendulumParams, noise_seed: u64) -> Result<Vec<(f64, Vec<f64>)>> {
    p.validate()?;
    let timeline = p.timeline()?;
    let mut noise = NoiseSource::process(noise_seed);
    let mut x = vec![p.theta0, p.theta_dot0];
    let mut out = Vec::with_capacity(timeline.steps + 1);
    out.push((timeline.time(0), x.clone()));
    let linear = match p.truth {
        TruthModel::Linear => Some(p.process_model(p.sigma_r)?),
        TruthModel::Nonlinear => None,
    };
    for k in 1..=timeline.steps {
        let torque = noise.normal(p.sigma_r);
        x = match &linear {
            Some(model) => {
                let w = p.dt * torque / p.inertia();
                model.step(&x, &[0.0], &[w])?
            }
            None => rk4_step(p, &x, torque),
        };
        out.push((timeline.time(k), x.clone()));
    }
    Ok(out)
}

fn rk4_step(p: &PendulumParams, x: &[f64], torque: f64) -> Vec<f64> {
    let w2 = p.omega_squared();
    let drive = torque / p.inertia();
    let deriv = |th: f64, om: f64| (om, -w2 * th.sin() + drive);
    let h = p.dt;
    let (th, om) = (x[0], x[1]);
    let k1 = deriv(th, om);
    let k2 = deriv(th + 0.5 * h * k1.0, om + 0.5 * h * k1.1);
    let k3 = deriv(th + 0.5 * h * k2.0, om + 0.5 * h * k2.1);
    let k4 = deriv(th + h * k3.0, om + h * k3.1);
    vec![
        th + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        om + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ]
}

/// Mechanical energy per unit mass, `g l (1 − cos θ) + ½ l² θ̇²`.
pub fn pendulum_energy(p: &PendulumParams, x: &[f64]) -> f64 {
    p.gravity * p.length * (1.0 - x[0].cos()) + 0.5 * p.length * p.length * x[1] * x[1]
}
