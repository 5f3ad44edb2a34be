//! Simulated experiments: truth, noisy measurements, filtering, metrics.
//!
//! A run predicts at every `dt` step and updates at every measurement
//! instant. The filter is seeded from the measurement taken at t = 0, so a
//! run with `N` steps has `N + 1` records and one update per later
//! measurement instant.

mod pendulum;
mod rng;
mod tracking;

pub use pendulum::{build_pendulum_models, pendulum_energy, simulate_pendulum_truth, PendulumParams, TruthModel};
pub use rng::NoiseSource;
pub use tracking::{build_tracking_models, simulate_tracking_truth, TrackingParams};

use crate::error::{Error, Result};
use crate::kalman::{self, FilterEstimate, InnovationRecord, InnovationSummary};
use crate::statespace::{DiscreteLinearModel, MeasurementModel};

/// Floor on the filter's measurement noise variance so that `R` stays
/// positive definite when a scenario is configured noiseless.
pub const MIN_MEASUREMENT_VARIANCE: f64 = 1e-10;

/// Allowed mismatch between `dt` multiples and the durations they tile.
pub const TIME_GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Pendulum(PendulumParams),
    Tracking(TrackingParams),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Pendulum(_) => "pendulum",
            Scenario::Tracking(_) => "tracking",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Pendulum(p) => p.validate(),
            Scenario::Tracking(p) => p.validate(),
        }
    }
}

/// Step grid shared by truth and filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Timeline {
    dt: f64,
    steps: usize,
    stride: usize,
    rate_hz: Option<f64>,
}

impl Timeline {
    fn new(dt: f64, duration: f64, rate_hz: Option<f64>) -> Result<Self> {
        let steps = (duration / dt).round();
        if steps < 1.0 {
            return Err(Error::domain("duration", "must span at least one dt step"));
        }
        let stride = match rate_hz {
            Some(rate) => {
                let interval = 1.0 / rate;
                let stride = (interval / dt).round();
                if stride < 1.0 || (stride * dt - interval).abs() > TIME_GRID_TOL {
                    return Err(Error::domain(
                        "dt",
                        format!("{dt} s does not divide the measurement interval {interval} s"),
                    ));
                }
                stride as usize
            }
            None => 1,
        };
        Ok(Self {
            dt,
            steps: steps as usize,
            stride,
            rate_hz,
        })
    }

    /// Time of step `k`; measurement instants land exactly on `j / rate`.
    fn time(&self, k: usize) -> f64 {
        match self.rate_hz {
            Some(rate) => (k / self.stride) as f64 / rate + (k % self.stride) as f64 * self.dt,
            None => k as f64 * self.dt,
        }
    }

    fn is_measurement(&self, k: usize) -> bool {
        k.is_multiple_of(self.stride)
    }
}

pub(crate) fn check_positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, format!("must be positive, got {v}")))
    }
}

pub(crate) fn check_nonneg(what: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, format!("must be non-negative, got {v}")))
    }
}

/// One time step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub x_true: Vec<f64>,
    /// Present at measurement instants.
    pub z: Option<Vec<f64>>,
    pub x_hat: Vec<f64>,
    pub p_diag: Vec<f64>,
    /// Present when a measurement update was applied.
    pub innovation: Option<InnovationRecord>,
    /// `3·√p_diag`
    pub three_sigma: Vec<f64>,
}

impl TraceRecord {
    pub fn nu(&self) -> Option<&[f64]> {
        self.innovation.as_ref().map(|i| i.nu.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    pub scenario: &'static str,
    pub seed: u64,
    pub state_dim: usize,
    pub meas_dim: usize,
    pub records: Vec<TraceRecord>,
    pub summary: Summary,
}

impl ScenarioTrace {
    pub fn updates(&self) -> impl Iterator<Item = (f64, &InnovationRecord)> {
        self.records
            .iter()
            .filter_map(|r| r.innovation.as_ref().map(|i| (r.t, i)))
    }
}

/// Accuracy and consistency metrics over one run or a pool of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub updates: usize,
    /// Per-state root-mean-square estimation error.
    pub rmse: Vec<f64>,
    /// Per-state fraction of records with `|x̂ᵢ − xᵢ| ≤ 3√Pᵢᵢ`.
    pub containment: Vec<f64>,
    /// Containment over all (record, state) pairs.
    pub containment_fraction: f64,
    /// `None` with fewer than two updates.
    pub innovation: Option<InnovationSummary>,
    /// Mean of the diagonal of `S` over the updates.
    pub innovation_var_mean: Option<Vec<f64>>,
}

impl Summary {
    /// Smallest per-state containment.
    pub fn min_containment(&self) -> f64 {
        self.containment.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether `|mean νᵢ| ≤ k·√(S̄ᵢᵢ / N)` for every component.
    pub fn innovation_mean_within(&self, k_sigma: f64) -> Option<bool> {
        let inn = self.innovation.as_ref()?;
        let var = self.innovation_var_mean.as_ref()?;
        let n = inn.count as f64;
        Some(
            inn.mean
                .iter()
                .zip(var)
                .all(|(m, v)| m.abs() <= k_sigma * (v / n).sqrt()),
        )
    }
}

/// Metrics for a single trace.
pub fn compute_metrics(trace: &ScenarioTrace) -> Result<Summary> {
    metrics_over(&trace.records)
}

/// Metrics over the concatenated records of several traces.
pub fn compute_pooled_metrics(traces: &[ScenarioTrace]) -> Result<Summary> {
    let records: Vec<&TraceRecord> = traces.iter().flat_map(|t| &t.records).collect();
    metrics_over(records)
}

fn metrics_over<'a, I>(records: I) -> Result<Summary>
where
    I: IntoIterator<Item = &'a TraceRecord>,
{
    let records: Vec<&TraceRecord> = records.into_iter().collect();
    let Some(first) = records.first() else {
        return Err(Error::domain("trace", "no records"));
    };
    let n = first.x_true.len();
    let mut sq = vec![0.0; n];
    let mut inside = vec![0usize; n];
    for r in &records {
        if r.x_true.len() != n || r.x_hat.len() != n || r.three_sigma.len() != n {
            return Err(Error::Shape {
                op: "compute_metrics",
                left: (n, 1),
                right: (r.x_hat.len(), 1),
            });
        }
        for i in 0..n {
            let err = r.x_hat[i] - r.x_true[i];
            sq[i] += err * err;
            if err.abs() <= r.three_sigma[i] {
                inside[i] += 1;
            }
        }
    }
    let count = records.len() as f64;
    let innovations: Vec<&InnovationRecord> =
        records.iter().filter_map(|r| r.innovation.as_ref()).collect();
    let (innovation, innovation_var_mean) = if innovations.len() >= 2 {
        let stats = kalman::innovation_stats(innovations.iter().copied())?;
        let d = stats.mean.len();
        let mut var = vec![0.0; d];
        for inn in &innovations {
            for (v, s) in var.iter_mut().zip(inn.s.diagonal()) {
                *v += s;
            }
        }
        var.iter_mut().for_each(|v| *v /= innovations.len() as f64);
        (Some(stats), Some(var))
    } else {
        (None, None)
    };
    Ok(Summary {
        records: records.len(),
        updates: innovations.len(),
        rmse: sq.iter().map(|s| (s / count).sqrt()).collect(),
        containment: inside.iter().map(|&c| c as f64 / count).collect(),
        containment_fraction: inside.iter().sum::<usize>() as f64 / (count * n as f64),
        innovation,
        innovation_var_mean,
    })
}

/// Mean NIS of the updates falling in each consecutive `window_s` window,
/// `(0, w], (w, 2w], …`.
pub fn windowed_mean_nis(trace: &ScenarioTrace, window_s: f64) -> Vec<f64> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (t, inn) in trace.updates() {
        let idx = ((t / window_s).ceil() as usize).saturating_sub(1);
        if sums.len() <= idx {
            sums.resize(idx + 1, (0.0, 0));
        }
        sums[idx].0 += inn.nis;
        sums[idx].1 += 1;
    }
    sums.into_iter()
        .map(|(s, c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect()
}

/// Simulates truth and measurements for `seed` and runs the filter over
/// them. Filter divergence shows up in the metrics, never as an error.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<ScenarioTrace> {
    let (truth, process, meas, meas_std, timeline) = match scenario {
        Scenario::Pendulum(p) => {
            let (process, meas) = build_pendulum_models(p)?;
            (
                simulate_pendulum_truth(p, seed)?,
                process,
                meas,
                vec![p.sigma_o],
                p.timeline()?,
            )
        }
        Scenario::Tracking(p) => {
            let (process, meas) = build_tracking_models(p)?;
            (
                simulate_tracking_truth(p, seed)?,
                process,
                meas,
                vec![p.sigma_pos; 2],
                p.timeline()?,
            )
        }
    };
    let records = filter_run(&truth, &process, &meas, &meas_std, &timeline, seed)?;
    let mut trace = ScenarioTrace {
        scenario: scenario.name(),
        seed,
        state_dim: process.state_dim(),
        meas_dim: meas.meas_dim(),
        records,
        summary: Summary {
            records: 0,
            updates: 0,
            rmse: vec![],
            containment: vec![],
            containment_fraction: 0.0,
            innovation: None,
            innovation_var_mean: None,
        },
    };
    trace.summary = compute_metrics(&trace)?;
    Ok(trace)
}

fn filter_run(
    truth: &[(f64, Vec<f64>)],
    process: &DiscreteLinearModel,
    meas: &MeasurementModel,
    meas_std: &[f64],
    timeline: &Timeline,
    seed: u64,
) -> Result<Vec<TraceRecord>> {
    let mut noise = NoiseSource::measurement(seed);
    let mut observe = |x: &[f64]| -> Result<Vec<f64>> {
        let v: Vec<f64> = meas_std.iter().map(|s| noise.normal(*s)).collect();
        meas.measure(x, &v)
    };
    let u = vec![0.0; process.input_dim()];

    let (t0, x0) = &truth[0];
    let z0 = observe(x0)?;
    let mut est = FilterEstimate::from_first_measurement(meas, &z0)?;
    let mut records = Vec::with_capacity(truth.len());
    records.push(record(*t0, x0, Some(z0), &est, None));

    for (k, (t, x)) in truth.iter().enumerate().skip(1) {
        let prior = kalman::predict(&est, process, &u)?;
        if timeline.is_measurement(k) {
            let z = observe(x)?;
            let (post, inn) = kalman::update(&prior, meas, &z)?;
            est = post;
            records.push(record(*t, x, Some(z), &est, Some(inn)));
        } else {
            est = prior.coast()?;
            records.push(record(*t, x, None, &est, None));
        }
    }
    Ok(records)
}

fn record(
    t: f64,
    x: &[f64],
    z: Option<Vec<f64>>,
    est: &FilterEstimate,
    innovation: Option<InnovationRecord>,
) -> TraceRecord {
    let p_diag = est.cov().diagonal();
    TraceRecord {
        t,
        x_true: x.to_vec(),
        z,
        x_hat: est.mean().to_vec(),
        three_sigma: p_diag.iter().map(|p| 3.0 * p.max(0.0).sqrt()).collect(),
        p_diag,
        innovation,
    }
}
