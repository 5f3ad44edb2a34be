//! Linear state estimation for multi-sensor fusion.
//!
//! - [`matlib`]: dense matrices and the matrix exponential.
//! - [`statespace`]: continuous/discrete linear models and discretization.
//! - [`lsq`]: batch, weighted and recursive least squares.
//! - [`kalman`]: the linear Kalman filter and innovation statistics.
//! - [`scenarios`]: pendulum and 2D tracking experiments with metrics.

pub mod error;
pub mod kalman;
pub mod lsq;
pub mod matlib;
pub mod scenarios;
pub mod statespace;

pub use error::{Error, Result};
pub use matlib::Matrix;
