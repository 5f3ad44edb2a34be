#![allow(dead_code)]

use fusekit_core::scenarios::NoiseSource;
use fusekit_core::Matrix;

pub fn uniform_in(rng: &mut NoiseSource, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

pub fn random_matrix(rng: &mut NoiseSource, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| uniform_in(rng, lo, hi)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// `B Bᵀ + eps·I`, symmetric positive definite.
pub fn random_spd(rng: &mut NoiseSource, n: usize, eps: f64) -> Matrix {
    let b = random_matrix(rng, n, n, -1.0, 1.0);
    b.multiply(&b.transpose())
        .unwrap()
        .add(&Matrix::identity(n).scale(eps).unwrap())
        .unwrap()
}

pub fn max_abs_vec_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn rel_vec_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    max_abs_vec_diff(a, b) / scale
}

pub fn rel_mat_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(1e-300)
}

/// ‖M‖∞ condition number estimate of a square matrix.
pub fn cond_inf(m: &Matrix) -> f64 {
    let norm = |m: &Matrix| {
        (0..m.rows())
            .map(|r| m.row(r).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.invert() {
        Ok(inv) => norm(m) * norm(&inv),
        Err(_) => f64::INFINITY,
    }
}
