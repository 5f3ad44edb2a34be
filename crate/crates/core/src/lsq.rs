//! Least-squares estimation of a constant vector `x` from `y = H x + v`.
//!
//! [`batch_ls`] and [`weighted_ls`] solve the normal equations in one shot;
//! [`RlsState`] folds measurements in one block at a time with the optimal
//! gain and the Joseph-form covariance update.

use crate::error::{Error, Result};
use crate::matlib::{vec_add, vec_sub, Matrix};
use crate::statespace::{BELIEF_TOL, MODEL_SYMMETRY_TOL};

/// Ordinary least squares: `x̂ = (HᵀH)⁻¹ Hᵀ y`.
pub fn batch_ls(h: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    check_system(h, y)?;
    let ht = h.transpose();
    let normal = ht.multiply(h)?.invert()?;
    normal.multiply(&ht)?.mul_vec(y)
}

/// Weighted least squares with measurement noise covariance `R`.
///
/// Returns `x̂ = (HᵀR⁻¹H)⁻¹ HᵀR⁻¹ y` together with its covariance
/// `(HᵀR⁻¹H)⁻¹`.
pub fn weighted_ls(h: &Matrix, y: &[f64], r: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_system(h, y)?;
    if r.shape() != (h.rows(), h.rows()) {
        return Err(Error::Shape {
            op: "weighted_ls R",
            left: h.shape(),
            right: r.shape(),
        });
    }
    check_noise_cov(r)?;
    let ht_rinv = h.transpose().multiply(&r.invert()?)?;
    let cov = ht_rinv.multiply(h)?.invert()?.symmetrize()?;
    let x = cov.multiply(&ht_rinv)?.mul_vec(y)?;
    Ok((x, cov))
}

fn check_system(h: &Matrix, y: &[f64]) -> Result<()> {
    if h.rows() != y.len() {
        return Err(Error::Shape {
            op: "least squares",
            left: h.shape(),
            right: (y.len(), 1),
        });
    }
    if h.rows() < h.cols() {
        return Err(Error::Underdetermined {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    Ok(())
}

pub(crate) fn check_noise_cov(r: &Matrix) -> Result<()> {
    if !r.is_symmetric(MODEL_SYMMETRY_TOL) || !r.is_positive_definite(0.0) {
        return Err(Error::domain("R", "must be symmetric positive definite"));
    }
    Ok(())
}

/// Recursive least-squares estimator state.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    x_hat: Vec<f64>,
    p: Matrix,
    k: usize,
}

impl RlsState {
    /// Starts the recursion from a prior guess `x0` with covariance `p0`.
    pub fn new(x0: Vec<f64>, p0: Matrix) -> Result<Self> {
        if p0.shape() != (x0.len(), x0.len()) {
            return Err(Error::Shape {
                op: "rls init",
                left: (x0.len(), 1),
                right: p0.shape(),
            });
        }
        if !p0.is_symmetric(BELIEF_TOL) || !p0.is_positive_semidefinite(BELIEF_TOL) {
            return Err(Error::domain(
                "P0",
                "must be symmetric positive semidefinite",
            ));
        }
        Ok(Self { x_hat: x0, p: p0, k: 0 })
    }

    pub fn x_hat(&self) -> &[f64] {
        &self.x_hat
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    /// Number of measurement blocks absorbed so far.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Absorbs the measurement block `y = H x + v`, `v ~ N(0, R)`.
    pub fn update(&self, h: &Matrix, y: &[f64], r: &Matrix) -> Result<RlsState> {
        check_noise_cov(r)?;
        let up = joseph_update(&self.x_hat, &self.p, h, y, r)?;
        Ok(Self {
            x_hat: up.x,
            p: up.p,
            k: self.k + 1,
        })
    }
}

/// Result of one gain-based correction.
pub(crate) struct GainUpdate {
    pub x: Vec<f64>,
    pub p: Matrix,
    pub nu: Vec<f64>,
    pub s: Matrix,
    pub s_inv: Matrix,
}

/// `K = P Hᵀ (H P Hᵀ + R)⁻¹`, `x ← x + K(y − Hx)`, Joseph-form `P`, then
/// re-symmetrized.
pub(crate) fn joseph_update(
    x: &[f64],
    p: &Matrix,
    h: &Matrix,
    y: &[f64],
    r: &Matrix,
) -> Result<GainUpdate> {
    let n = x.len();
    if p.shape() != (n, n) || h.cols() != n {
        return Err(Error::Shape {
            op: "gain update",
            left: p.shape(),
            right: h.shape(),
        });
    }
    if y.len() != h.rows() || r.shape() != (h.rows(), h.rows()) {
        return Err(Error::Shape {
            op: "gain update",
            left: h.shape(),
            right: r.shape(),
        });
    }
    let nu = vec_sub(y, &h.mul_vec(x)?);
    let pht = p.multiply(&h.transpose())?;
    let s = h.multiply(&pht)?.add(r)?;
    let s_inv = s.invert()?;
    let gain = pht.multiply(&s_inv)?;
    let x = vec_add(x, &gain.mul_vec(&nu)?);
    let p = joseph_covariance(p, &gain, h, r)?.symmetrize()?;
    Ok(GainUpdate { x, p, nu, s, s_inv })
}

/// Gain minimizing the trace of the updated covariance.
pub fn optimal_gain(p: &Matrix, h: &Matrix, r: &Matrix) -> Result<Matrix> {
    let pht = p.multiply(&h.transpose())?;
    pht.multiply(&h.multiply(&pht)?.add(r)?.invert()?)
}

/// `(I − KH) P (I − KH)ᵀ + K R Kᵀ`, valid for any gain `K`.
pub fn joseph_covariance(p: &Matrix, k: &Matrix, h: &Matrix, r: &Matrix) -> Result<Matrix> {
    let ikh = Matrix::identity(p.rows()).subtract(&k.multiply(h)?)?;
    ikh.multiply(p)?
        .multiply(&ikh.transpose())?
        .add(&k.multiply(r)?.multiply(&k.transpose())?)
}

/// `(I − KH) P`, equal to the Joseph form only for the optimal gain.
pub fn short_form_covariance(p: &Matrix, k: &Matrix, h: &Matrix) -> Result<Matrix> {
    Matrix::identity(p.rows())
        .subtract(&k.multiply(h)?)?
        .multiply(p)
}
