//! Seeded Gaussian noise.
//!
//! The generator is xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Uniforms are
//! `((next_u64 >> 11) + 1) · 2⁻⁵³ ∈ (0, 1]`, and each standard normal
//! consumes two uniforms through the cosine branch of Box-Muller:
//! `√(−2 ln u₁) · cos(2π u₂)`.
//!
//! A scenario seed drives two streams: truth noise uses the generator as
//! seeded, measurement noise uses the same generator after one `jump()`
//! (2¹²⁸ draws ahead), so the two never overlap.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: Xoshiro256PlusPlus,
}

impl NoiseSource {
    /// Stream for process (truth) noise.
    pub fn process(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Stream for measurement noise, disjoint from [`NoiseSource::process`].
    pub fn measurement(seed: u64) -> Self {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        rng.jump();
        Self { rng }
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `N(0, std²)`; `std = 0` still advances the stream.
    pub fn normal(&mut self, std: f64) -> f64 {
        std * self.standard_normal()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_range() {
        let mut s = NoiseSource::process(7);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn reproducible_and_disjoint() {
        let a: Vec<f64> = {
            let mut s = NoiseSource::process(42);
            (0..8).map(|_| s.standard_normal()).collect()
        };
        let b: Vec<f64> = {
            let mut s = NoiseSource::process(42);
            (0..8).map(|_| s.standard_normal()).collect()
        };
        let c: Vec<f64> = {
            let mut s = NoiseSource::measurement(42);
            (0..8).map(|_| s.standard_normal()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn normal_moments() {
        let mut s = NoiseSource::process(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.normal(2.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // standard errors: 2/sqrt(n) ~ 0.0045 and 4*sqrt(2/n) ~ 0.0126
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 4.0).abs() < 0.06, "var {var}");
    }
}
