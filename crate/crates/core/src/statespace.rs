//! Continuous and discrete linear models.
//!
//! A [`ContinuousLinearModel`] `ẋ = Ax + Bu` is converted to the discrete
//! pair `(F, G)` under a zero-order hold on `u`. The discrete process model
//! is `x_k = F x_{k-1} + G u_{k-1} + L w_{k-1}` with `w ~ N(0, Q)`, and the
//! measurement model is `z_k = H x_k + M v_k` with `v ~ N(0, R)`.

use crate::error::{Error, Result};
use crate::matlib::{matrix_exponential, vec_add, Matrix, EXPM_MAX_TERMS, EXPM_TERM_TOL};

/// Symmetry tolerance for model noise covariances.
pub const MODEL_SYMMETRY_TOL: f64 = 1e-12;
/// Pivot tolerance for the semidefiniteness check on `Q`.
pub const MODEL_PSD_TOL: f64 = 1e-12;
/// Symmetry / semidefiniteness tolerance for Gaussian beliefs.
pub const BELIEF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLinearModel {
    a: Matrix,
    b: Matrix,
}

impl ContinuousLinearModel {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        a.require_square("continuous model A")?;
        if b.rows() != a.rows() {
            return Err(Error::Shape {
                op: "continuous model B",
                left: a.shape(),
                right: b.shape(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    /// Zero-order-hold discretization, returning `(F, G)`.
    ///
    /// `F = e^{A·dt}`. `G = F (I − e^{−A·dt}) A⁻¹ B` when `A` inverts;
    /// for singular `A` it falls back to [`input_integral_series`].
    pub fn discretize(&self, dt: f64) -> Result<(Matrix, Matrix)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt", format!("must be positive, got {dt}")));
        }
        let f = matrix_exponential(&self.a, dt)?;
        let g = match self.a.invert() {
            Ok(a_inv) => {
                let n = self.state_dim();
                let back = matrix_exponential(&self.a, -dt)?;
                f.multiply(&Matrix::identity(n).subtract(&back)?)?
                    .multiply(&a_inv)?
                    .multiply(&self.b)?
            }
            Err(Error::Singular { .. }) => input_integral_series(&self.a, &self.b, dt)?,
            Err(e) => return Err(e),
        };
        Ok((f, g))
    }
}

/// `∫₀^dt e^{A v} dv · B` as the series `Σ Aʲ dt^{j+1}/(j+1)! · B`.
///
/// Valid for any `A`, including singular and nilpotent ones.
pub fn input_integral_series(a: &Matrix, b: &Matrix, dt: f64) -> Result<Matrix> {
    a.require_square("input integral")?;
    let n = a.rows();
    let mut term = Matrix::identity(n).scale(dt)?;
    let mut sum = term.clone();
    let mut converged = false;
    for j in 1..=EXPM_MAX_TERMS {
        term = term.multiply(a)?.scale(dt / (j + 1) as f64)?;
        sum = sum.add(&term)?;
        if term.max_abs() < EXPM_TERM_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            terms: EXPM_MAX_TERMS,
        });
    }
    sum.multiply(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLinearModel {
    f: Matrix,
    g: Matrix,
    l: Matrix,
    q: Matrix,
    dt: f64,
}

impl DiscreteLinearModel {
    pub fn new(f: Matrix, g: Matrix, l: Matrix, q: Matrix, dt: f64) -> Result<Self> {
        f.require_square("process model F")?;
        for (op, m) in [("process model G", &g), ("process model L", &l)] {
            if m.rows() != f.rows() {
                return Err(Error::Shape {
                    op,
                    left: f.shape(),
                    right: m.shape(),
                });
            }
        }
        if q.shape() != (l.cols(), l.cols()) {
            return Err(Error::Shape {
                op: "process noise Q",
                left: l.shape(),
                right: q.shape(),
            });
        }
        if !q.is_symmetric(MODEL_SYMMETRY_TOL) {
            return Err(Error::domain("Q", "not symmetric"));
        }
        if !q.is_positive_semidefinite(MODEL_PSD_TOL) {
            return Err(Error::domain("Q", "not positive semidefinite"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self { f, g, l, q, dt })
    }

    /// Model with `L = I`, so `Q` is the full additive noise covariance.
    pub fn with_additive_noise(f: Matrix, g: Matrix, q: Matrix, dt: f64) -> Result<Self> {
        let l = Matrix::identity(f.rows());
        Self::new(f, g, l, q, dt)
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state_dim(&self) -> usize {
        self.f.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.g.cols()
    }

    pub fn noise_dim(&self) -> usize {
        self.l.cols()
    }

    /// Same model with a different process noise covariance.
    pub fn with_q(&self, q: Matrix) -> Result<Self> {
        Self::new(self.f.clone(), self.g.clone(), self.l.clone(), q, self.dt)
    }

    /// `F x + G u + L w`.
    pub fn step(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let fx = self.f.mul_vec(x)?;
        let gu = self.g.mul_vec(u)?;
        let lw = self.l.mul_vec(w)?;
        Ok(vec_add(&vec_add(&fx, &gu), &lw))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    h: Matrix,
    m: Matrix,
    r: Matrix,
}

impl MeasurementModel {
    pub fn new(h: Matrix, m: Matrix, r: Matrix) -> Result<Self> {
        if m.rows() != h.rows() {
            return Err(Error::Shape {
                op: "measurement model M",
                left: h.shape(),
                right: m.shape(),
            });
        }
        if r.shape() != (m.cols(), m.cols()) {
            return Err(Error::Shape {
                op: "measurement noise R",
                left: m.shape(),
                right: r.shape(),
            });
        }
        if !r.is_symmetric(MODEL_SYMMETRY_TOL) {
            return Err(Error::domain("R", "not symmetric"));
        }
        if !r.is_positive_definite(0.0) {
            return Err(Error::domain("R", "not positive definite"));
        }
        Ok(Self { h, m, r })
    }

    /// Model with `M = I`, so `R` is the full additive noise covariance.
    pub fn with_additive_noise(h: Matrix, r: Matrix) -> Result<Self> {
        let m = Matrix::identity(h.rows());
        Self::new(h, m, r)
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn meas_dim(&self) -> usize {
        self.h.rows()
    }

    pub fn state_dim(&self) -> usize {
        self.h.cols()
    }

    /// Noise covariance seen by the measurement, `M R Mᵀ`.
    pub fn effective_noise_cov(&self) -> Result<Matrix> {
        self.m.multiply(&self.r)?.multiply(&self.m.transpose())
    }

    /// `H x + M v`.
    pub fn measure(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec_add(&self.h.mul_vec(x)?, &self.m.mul_vec(v)?))
    }
}

/// Mean and covariance of a state belief.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: Vec<f64>,
    cov: Matrix,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: Matrix) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(Error::Shape {
                op: "gaussian",
                left: (mean.len(), 1),
                right: cov.shape(),
            });
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { op: "gaussian" });
        }
        if !cov.is_symmetric(BELIEF_TOL) {
            return Err(Error::domain("covariance", "not symmetric"));
        }
        if !cov.is_positive_semidefinite(BELIEF_TOL) {
            return Err(Error::domain("covariance", "not positive semidefinite"));
        }
        Ok(Self { mean, cov })
    }

    /// Filter outputs are semidefinite by construction; skip re-validation.
    pub(crate) fn trusted(mean: Vec<f64>, cov: Matrix) -> Self {
        debug_assert_eq!(cov.shape(), (mean.len(), mean.len()));
        Self { mean, cov }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn integrator_of_constant_input() {
        let model = ContinuousLinearModel::new(Matrix::zeros(2, 2), Matrix::identity(2)).unwrap();
        let (f, g) = model.discretize(0.5).unwrap();
        assert_eq!(f, Matrix::identity(2));
        assert!(g.max_abs_diff(&Matrix::diag(&[0.5, 0.5]).unwrap()) < 1e-15);
    }

    #[test]
    fn double_integrator_is_exact() {
        let model =
            ContinuousLinearModel::new(m(&[&[0.0, 1.0], &[0.0, 0.0]]), m(&[&[0.0], &[1.0]])).unwrap();
        for dt in [0.01, 0.1, 0.7] {
            let (f, g) = model.discretize(dt).unwrap();
            assert!(f.max_abs_diff(&m(&[&[1.0, dt], &[0.0, 1.0]])) < 1e-15);
            assert!(g.max_abs_diff(&m(&[&[dt * dt / 2.0], &[dt]])) < 1e-15);
        }
    }

    #[test]
    fn discretize_rejects_bad_dt() {
        let model = ContinuousLinearModel::new(Matrix::zeros(1, 1), Matrix::identity(1)).unwrap();
        for dt in [0.0, -0.1, f64::NAN] {
            assert!(matches!(model.discretize(dt), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn continuous_model_shapes() {
        assert!(ContinuousLinearModel::new(Matrix::zeros(2, 3), Matrix::zeros(2, 1)).is_err());
        assert!(ContinuousLinearModel::new(Matrix::zeros(2, 2), Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn step_examples() {
        let id = DiscreteLinearModel::with_additive_noise(
            Matrix::identity(2),
            Matrix::zeros(2, 1),
            Matrix::zeros(2, 2),
            0.1,
        )
        .unwrap();
        assert_eq!(id.step(&[3.0, -1.0], &[0.0], &[0.0, 0.0]).unwrap(), vec![3.0, -1.0]);

        let cv = DiscreteLinearModel::with_additive_noise(
            m(&[&[1.0, 0.1], &[0.0, 1.0]]),
            Matrix::zeros(2, 1),
            Matrix::zeros(2, 2),
            0.1,
        )
        .unwrap();
        assert_eq!(cv.step(&[0.0, 1.0], &[0.0], &[0.0, 0.0]).unwrap(), vec![0.1, 1.0]);

        let torque = DiscreteLinearModel::new(
            Matrix::identity(2),
            Matrix::zeros(2, 1),
            m(&[&[0.0], &[1.0]]),
            Matrix::diag(&[1.0]).unwrap(),
            0.1,
        )
        .unwrap();
        let x = torque.step(&[1.0, 1.0], &[0.0], &[0.3]).unwrap();
        assert_eq!(x, vec![1.0, 1.3]);
        assert!(matches!(torque.step(&[1.0], &[0.0], &[0.3]), Err(Error::Shape { .. })));
    }

    #[test]
    fn process_model_validation() {
        let f = Matrix::identity(2);
        let g = Matrix::zeros(2, 1);
        let asym = m(&[&[1.0, 0.5], &[0.4, 1.0]]);
        assert!(matches!(
            DiscreteLinearModel::with_additive_noise(f.clone(), g.clone(), asym, 0.1),
            Err(Error::Domain { what: "Q", .. })
        ));
        let indefinite = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(DiscreteLinearModel::with_additive_noise(f.clone(), g.clone(), indefinite, 0.1).is_err());
        assert!(DiscreteLinearModel::with_additive_noise(f.clone(), g.clone(), Matrix::zeros(3, 3), 0.1).is_err());
        assert!(DiscreteLinearModel::with_additive_noise(f, g, Matrix::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn measure_examples() {
        let full = MeasurementModel::with_additive_noise(Matrix::identity(2), Matrix::identity(2)).unwrap();
        assert_eq!(full.measure(&[0.2, -0.4], &[0.0, 0.0]).unwrap(), vec![0.2, -0.4]);

        let angle = MeasurementModel::with_additive_noise(m(&[&[1.0, 0.0]]), Matrix::diag(&[0.01]).unwrap())
            .unwrap();
        let theta = 10f64.to_radians();
        let z = angle.measure(&[theta, 0.7], &[0.01]).unwrap();
        assert_eq!(z, vec![theta + 0.01]);

        let gated = MeasurementModel::new(m(&[&[1.0, 0.0]]), Matrix::zeros(1, 1), Matrix::diag(&[1.0]).unwrap())
            .unwrap();
        assert_eq!(gated.measure(&[theta, 0.7], &[123.0]).unwrap(), vec![theta]);
        assert!(matches!(gated.measure(&[theta], &[0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn measurement_noise_must_be_positive_definite() {
        let h = m(&[&[1.0, 0.0]]);
        assert!(MeasurementModel::with_additive_noise(h.clone(), Matrix::zeros(1, 1)).is_err());
        assert!(MeasurementModel::with_additive_noise(h, Matrix::diag(&[-1.0]).unwrap()).is_err());
    }

    #[test]
    fn gaussian_validation() {
        assert!(Gaussian::new(vec![0.0; 2], Matrix::identity(2)).is_ok());
        assert!(Gaussian::new(vec![0.0; 3], Matrix::identity(2)).is_err());
        assert!(Gaussian::new(vec![0.0; 2], m(&[&[1.0, 0.1], &[0.0, 1.0]])).is_err());
        assert!(Gaussian::new(vec![0.0; 2], Matrix::diag(&[1.0, -1.0]).unwrap()).is_err());
    }
}
