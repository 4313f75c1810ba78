//! Zero counting in one variable, the spherical-mean counting estimator in
//! several variables, and hole detection.

pub mod hole;
pub mod jensen;
pub mod roots;
pub mod winding;

use serde::{Deserialize, Serialize};

use crate::coeff::Stream;
use crate::error::{Error, Result};
use crate::gaf::GafSample;

pub use hole::{hole_test, HoleTestOptions, HoleVerdict, Verdict};
pub use jensen::{counting_from_jensen, nevanlinna_t, sphere_log_integral, SphereLogIntegral};
pub use roots::{companion_roots, count_roots_inside};
pub use winding::{count_zeros_disk, count_zeros_with_retry, WindingCount};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Winding,
    Jensen,
    LineSlice,
}

/// Zero mass in `B(0, r)`.
///
/// `raw_count` is the geometric count `ν(r)` (an integer in one variable);
/// `paper_n` is half of it, the normalization built on `log|ψ|` rather than
/// `log|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingEstimate {
    pub radius: f64,
    pub raw_count: f64,
    pub paper_n: f64,
    pub method: Method,
    pub error_bar: f64,
}

impl CountingEstimate {
    pub fn new(radius: f64, raw_count: f64, method: Method, error_bar: f64) -> Self {
        Self { radius, raw_count, paper_n: raw_count / 2.0, method, error_bar }
    }
}

/// Exact count for a one-variable sample via the argument principle.
pub fn counting_from_winding(sample: &GafSample, r: f64) -> Result<CountingEstimate> {
    if sample.n() != 1 {
        return Err(Error::Precondition("winding counts need a one-variable sample".into()));
    }
    let poly = sample.polynomial()?;
    let mut rng = sample.seed().rng(Stream::Perturbation);
    let (count, _) = count_zeros_with_retry(&poly, r, winding::DEFAULT_INITIAL_NODES, &mut rng)?;
    Ok(CountingEstimate::new(r, count.count as f64, Method::Winding, 0.0))
}
