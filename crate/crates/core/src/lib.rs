//! Gaussian analytic functions on C^n: sampling, evaluation, zero counting,
//! and Monte Carlo drivers for hole probabilities and counting statistics.

pub mod coeff;
pub mod error;
pub mod experiments;
pub mod gaf;
pub mod geometry;
pub mod sum;
pub mod zeros;

pub use error::{Error, Result};
pub use num_complex::Complex64;
