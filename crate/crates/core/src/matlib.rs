//! Dense row-major matrices and the matrix exponential.
//!
//! Every matrix in the crate (system, covariance, gain, observation) is a
//! [`Matrix`]. Vectors are plain `Vec<f64>` / `&[f64]` and enter products
//! through [`Matrix::mul_vec`]. Fallible operations return
//! [`Error::Shape`] on non-conformable inputs and [`Error::NonFinite`] if a
//! result would contain NaN or infinity.

use std::fmt;

use crate::error::{Error, Result};

/// Smallest pivot magnitude accepted by [`Matrix::invert`].
pub const PIVOT_TOL: f64 = 1e-12;

/// Series terms with max-abs below this end the exponential expansion.
pub const EXPM_TERM_TOL: f64 = 1e-14;

/// Upper bound on the number of series terms in [`matrix_exponential`].
pub const EXPM_MAX_TERMS: usize = 64;

/// `A·t` is halved until its max-abs entry is at most this value.
pub const EXPM_SCALE_TARGET: f64 = 0.5;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain("matrix", "dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape {
                op: "new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        let m = Self { rows, cols, data };
        m.finite("new")
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            if row.len() != c {
                return Err(Error::Shape {
                    op: "from_rows",
                    left: (r, c),
                    right: (1, row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("matrix", "dimensions must be positive"));
        }
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = *v;
        }
        m.finite("diag")
    }

    /// An `n×1` column matrix.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn multiply(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(self.shape_err("multiply", other));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out.finite("multiply")
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::Shape {
                op: "mul_vec",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        let out: Vec<f64> = (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
        if out.iter().all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NonFinite { op: "mul_vec" })
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn subtract(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with("subtract", other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Result<Matrix> {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * k).collect(),
        }
        .finite("scale")
    }

    pub fn trace(&self) -> Result<f64> {
        self.require_square("trace")?;
        Ok(self.diagonal().iter().sum())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute elementwise difference; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `(M + Mᵀ) / 2`. Requires a square matrix.
    pub fn symmetrize(&self) -> Result<Matrix> {
        self.require_square("symmetrize")?;
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Positive semidefiniteness via symmetric elimination: every pivot must
    /// be at least `-tol`, and a numerically zero pivot must have a
    /// numerically zero remainder column.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.elimination_pivots(tol)
            .is_some_and(|p| p.iter().all(|&d| d >= -tol))
    }

    /// Positive definiteness: every elimination pivot exceeds `tol`.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        self.elimination_pivots(tol)
            .is_some_and(|p| p.iter().all(|&d| d > tol))
    }

    fn elimination_pivots(&self, tol: f64) -> Option<Vec<f64>> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut w = self.data.clone();
        let mut pivots = Vec::with_capacity(n);
        for j in 0..n {
            let d = w[j * n + j];
            pivots.push(d);
            if d < -tol {
                return Some(pivots);
            }
            if d <= tol {
                // zero pivot: the rest of the column has to vanish as well
                for i in (j + 1)..n {
                    let bound = (tol * w[i * n + i].abs()).sqrt() + tol;
                    if w[i * n + j].abs() > bound {
                        return None;
                    }
                }
                continue;
            }
            for i in (j + 1)..n {
                let f = w[i * n + j] / d;
                if f == 0.0 {
                    continue;
                }
                for k in (j + 1)..n {
                    w[i * n + k] -= f * w[j * n + k];
                }
            }
        }
        Some(pivots)
    }

    /// Gauss-Jordan inversion with partial pivoting, rejecting pivots below
    /// [`PIVOT_TOL`].
    pub fn invert(&self) -> Result<Matrix> {
        self.invert_with_tol(PIVOT_TOL)
    }

    pub fn invert_with_tol(&self, pivot_tol: f64) -> Result<Matrix> {
        self.require_square("invert")?;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let (p, pivot) = (col..n)
                .map(|r| (r, a[r * n + col]))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .expect("non-empty pivot range");
            if pivot.abs() < pivot_tol || !pivot.is_finite() {
                return Err(Error::Singular { col, pivot });
            }
            if p != col {
                for k in 0..n {
                    a.swap(p * n + k, col * n + k);
                    inv.swap(p * n + k, col * n + k);
                }
            }
            for k in 0..n {
                a[col * n + k] /= pivot;
                inv[col * n + k] /= pivot;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..n {
                    a[r * n + k] -= f * a[col * n + k];
                    inv[r * n + k] -= f * inv[col * n + k];
                }
            }
        }
        Self {
            rows: n,
            cols: n,
            data: inv,
        }
        .finite("invert")
    }

    /// Determinant by partial-pivot elimination.
    pub fn determinant(&self) -> Result<f64> {
        self.require_square("determinant")?;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let p = (col..n)
                .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                .expect("non-empty pivot range");
            let pivot = a[p * n + col];
            if pivot == 0.0 {
                return Ok(0.0);
            }
            if p != col {
                for k in 0..n {
                    a.swap(p * n + k, col * n + k);
                }
                det = -det;
            }
            det *= pivot;
            for r in (col + 1)..n {
                let f = a[r * n + col] / pivot;
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
            }
        }
        Ok(det)
    }

    fn zip_with(&self, op: &'static str, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(self.shape_err(op, other));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
        .finite(op)
    }

    fn shape_err(&self, op: &'static str, other: &Matrix) -> Error {
        Error::Shape {
            op,
            left: self.shape(),
            right: other.shape(),
        }
    }

    pub(crate) fn require_square(&self, op: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::Shape {
                op,
                left: self.shape(),
                right: (self.cols, self.rows),
            })
        }
    }

    fn finite(self, op: &'static str) -> Result<Self> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(self)
        } else {
            Err(Error::NonFinite { op })
        }
    }
}

/// Which expansion [`matrix_exponential_with`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Scaled power series run to convergence, then squared back.
    Converged,
    /// `I + A·t`, the first-order truncation.
    FirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpmOptions {
    pub term_tol: f64,
    pub max_terms: usize,
    pub scale_target: f64,
    pub truncation: Truncation,
}

impl Default for ExpmOptions {
    fn default() -> Self {
        Self {
            term_tol: EXPM_TERM_TOL,
            max_terms: EXPM_MAX_TERMS,
            scale_target: EXPM_SCALE_TARGET,
            truncation: Truncation::Converged,
        }
    }
}

/// `e^{A·t}` by the power series with scaling and squaring.
pub fn matrix_exponential(a: &Matrix, t: f64) -> Result<Matrix> {
    matrix_exponential_with(a, t, &ExpmOptions::default())
}

/// `e^{A·t}` with explicit series controls.
///
/// `A·t` is divided by `2^s` until its max-abs entry is at most
/// `scale_target`; the series `Σ Xʲ/j!` is summed until a term's max-abs
/// drops below `term_tol`, and the sum is squared `s` times.
pub fn matrix_exponential_with(a: &Matrix, t: f64, opts: &ExpmOptions) -> Result<Matrix> {
    a.require_square("matrix_exponential")?;
    if !t.is_finite() {
        return Err(Error::domain("time", "must be finite"));
    }
    let n = a.rows();
    let at = a.scale(t)?;
    if opts.truncation == Truncation::FirstOrder {
        return Matrix::identity(n).add(&at);
    }

    let norm = at.max_abs();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > opts.scale_target {
        squarings += 1;
    }
    let x = at.scale(0.5f64.powi(squarings as i32))?;

    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    let mut converged = false;
    for j in 1..=opts.max_terms {
        term = term.multiply(&x)?.scale(1.0 / j as f64)?;
        sum = sum.add(&term)?;
        if term.max_abs() < opts.term_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            terms: opts.max_terms,
        });
    }
    for _ in 0..squarings {
        sum = sum.multiply(&sum)?;
    }
    Ok(sum)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn vec_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
