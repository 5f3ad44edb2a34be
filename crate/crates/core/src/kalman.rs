//! Linear Kalman filter over [`Gaussian`] beliefs.
//!
//! One cycle is [`predict`] (posterior at `k-1` to prior at `k`) followed by
//! [`update`] (prior at `k` to posterior at `k`). When no measurement
//! arrives at step `k`, [`FilterEstimate::coast`] turns the prior into the
//! posterior unchanged so the next prediction can proceed.

use crate::error::{Error, Result};
use crate::lsq::joseph_update;
use crate::matlib::{dot, vec_add, Matrix};
use crate::statespace::{DiscreteLinearModel, Gaussian, MeasurementModel};

/// Variance given to state components the first measurement does not
/// observe, as a multiple of the largest observed-component variance.
pub const UNOBSERVED_VARIANCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    /// Conditioned on measurements up to `k-1`.
    Prior,
    /// Conditioned on measurements up to `k`.
    Posterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterEstimate {
    belief: Gaussian,
    kind: EstimateKind,
    k: usize,
}

impl FilterEstimate {
    /// Posterior at step 0 from an explicit belief.
    pub fn initial(belief: Gaussian) -> Self {
        Self {
            belief,
            kind: EstimateKind::Posterior,
            k: 0,
        }
    }

    /// Step-0 posterior seeded from the first measurement.
    ///
    /// Every row of `H` must select a single state component. Observed
    /// components take the measured value and the measurement noise
    /// covariance; the rest start at zero with variance
    /// [`UNOBSERVED_VARIANCE_FACTOR`] times the largest observed variance.
    pub fn from_first_measurement(meas: &MeasurementModel, z: &[f64]) -> Result<Self> {
        let h = meas.h();
        if z.len() != h.rows() {
            return Err(Error::Shape {
                op: "initialize",
                left: h.shape(),
                right: (z.len(), 1),
            });
        }
        let mut observed: Vec<Option<usize>> = vec![None; h.cols()];
        for j in 0..h.rows() {
            let hits: Vec<usize> = (0..h.cols()).filter(|&i| h.get(j, i) != 0.0).collect();
            match hits[..] {
                [i] if h.get(j, i) == 1.0 && observed[i].is_none() => observed[i] = Some(j),
                _ => {
                    return Err(Error::domain(
                        "H",
                        "initialization needs rows that each select one distinct state",
                    ))
                }
            }
        }
        let r = meas.effective_noise_cov()?;
        let max_var = r.diagonal().into_iter().fold(0.0, f64::max);
        let n = h.cols();
        let mut mean = vec![0.0; n];
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            match observed[i] {
                Some(j) => {
                    mean[i] = z[j];
                    for i2 in 0..n {
                        if let Some(j2) = observed[i2] {
                            cov[i * n + i2] = r.get(j, j2);
                        }
                    }
                }
                None => cov[i * n + i] = UNOBSERVED_VARIANCE_FACTOR * max_var,
            }
        }
        let belief = Gaussian::new(mean, Matrix::new(n, n, cov)?)?;
        Ok(Self::initial(belief))
    }

    pub fn belief(&self) -> &Gaussian {
        &self.belief
    }

    pub fn mean(&self) -> &[f64] {
        self.belief.mean()
    }

    pub fn cov(&self) -> &Matrix {
        self.belief.cov()
    }

    pub fn kind(&self) -> EstimateKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// A step with no measurement: the prior becomes the posterior as is.
    pub fn coast(self) -> Result<Self> {
        self.expect_kind(EstimateKind::Prior, "coast")?;
        Ok(Self {
            kind: EstimateKind::Posterior,
            ..self
        })
    }

    fn expect_kind(&self, kind: EstimateKind, op: &str) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::domain(
                "estimate",
                format!("{op} expects a {kind:?} estimate, got {:?}", self.kind),
            ))
        }
    }
}

/// Innovation of one measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationRecord {
    /// `z − H x̂⁻`
    pub nu: Vec<f64>,
    /// `H P⁻ Hᵀ + M R Mᵀ`
    pub s: Matrix,
    /// `νᵀ S⁻¹ ν`
    pub nis: f64,
}

/// Process update: `x̂⁻ = F x̂ + G u`, `P⁻ = F P Fᵀ + L Q Lᵀ`.
pub fn predict(est: &FilterEstimate, model: &DiscreteLinearModel, u: &[f64]) -> Result<FilterEstimate> {
    est.expect_kind(EstimateKind::Posterior, "predict")?;
    if model.state_dim() != est.belief.dim() {
        return Err(Error::Shape {
            op: "predict",
            left: model.f().shape(),
            right: est.cov().shape(),
        });
    }
    let f = model.f();
    let mean = vec_add(&f.mul_vec(est.mean())?, &model.g().mul_vec(u)?);
    let l = model.l();
    let cov = f
        .multiply(est.cov())?
        .multiply(&f.transpose())?
        .add(&l.multiply(model.q())?.multiply(&l.transpose())?)?
        .symmetrize()?;
    Ok(FilterEstimate {
        belief: Gaussian::trusted(mean, cov),
        kind: EstimateKind::Prior,
        k: est.k + 1,
    })
}

/// Measurement update with the optimal gain and Joseph-form covariance.
pub fn update(
    est: &FilterEstimate,
    meas: &MeasurementModel,
    z: &[f64],
) -> Result<(FilterEstimate, InnovationRecord)> {
    est.expect_kind(EstimateKind::Prior, "update")?;
    let r = meas.effective_noise_cov()?;
    let up = joseph_update(est.mean(), est.cov(), meas.h(), z, &r)?;
    let nis = dot(&up.nu, &up.s_inv.mul_vec(&up.nu)?).max(0.0);
    let posterior = FilterEstimate {
        belief: Gaussian::trusted(up.x, up.p),
        kind: EstimateKind::Posterior,
        k: est.k,
    };
    Ok((
        posterior,
        InnovationRecord {
            nu: up.nu,
            s: up.s,
            nis,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnovationSummary {
    pub count: usize,
    pub mean: Vec<f64>,
    /// Sample covariance with an `N − 1` denominator.
    pub sample_cov: Matrix,
    pub mean_nis: f64,
}

/// Sample statistics of a run's innovations.
pub fn innovation_stats<'a, I>(records: I) -> Result<InnovationSummary>
where
    I: IntoIterator<Item = &'a InnovationRecord>,
{
    let records: Vec<&InnovationRecord> = records.into_iter().collect();
    if records.len() < 2 {
        return Err(Error::domain(
            "innovations",
            format!("need at least 2 records, got {}", records.len()),
        ));
    }
    let d = records[0].nu.len();
    if let Some(bad) = records.iter().find(|r| r.nu.len() != d) {
        return Err(Error::Shape {
            op: "innovation_stats",
            left: (d, 1),
            right: (bad.nu.len(), 1),
        });
    }
    let n = records.len() as f64;
    let mut mean = vec![0.0; d];
    let mut nis = 0.0;
    for r in &records {
        for (m, v) in mean.iter_mut().zip(&r.nu) {
            *m += v;
        }
        nis += r.nis;
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    for r in &records {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += (r.nu[i] - mean[i]) * (r.nu[j] - mean[j]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n - 1.0);
    Ok(InnovationSummary {
        count: records.len(),
        mean,
        sample_cov: Matrix::new(d, d, cov)?,
        mean_nis: nis / n,
    })
}
