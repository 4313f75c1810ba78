//! Spherical means of `log|ψ|` and the counting estimator built from them.

use serde::{Deserialize, Serialize};

use super::{CountingEstimate, Method};
use crate::error::{Error, Result};
use crate::gaf::{complex_point, GafSample};
use crate::geometry::{partition_sphere, surface_integrals, IntegralEstimate, SpherePartition};

/// Default log-radius half-step of the centered difference.
pub const DEFAULT_H: f64 = 0.05;
const MAX_H: f64 = 0.2;

/// Default cells per facet edge for the estimator's sphere quadrature.
pub fn default_resolution(n: usize) -> usize {
    match n {
        1 => 128,
        2 => 8,
        _ => 3,
    }
}

/// Normalized spherical means at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereLogIntegral {
    pub radius: f64,
    /// `A(r)`: mean of `log|ψ|`.
    pub mean_log: IntegralEstimate,
    /// Mean of `|log|ψ||`.
    pub mean_abs_log: IntegralEstimate,
    /// Mean of `log⁺|ψ|`, the Nevanlinna characteristic.
    pub log_plus: IntegralEstimate,
}

fn check_partition(sample: &GafSample, r: f64, part: &SpherePartition) -> Result<()> {
    if part.d() != 2 * sample.n() {
        return Err(Error::Precondition(format!(
            "partition lives in R^{} but the sample in C^{}",
            part.d(),
            sample.n()
        )));
    }
    if !((part.radius() - r).abs() <= 1e-12 * r) {
        return Err(Error::Precondition(format!("partition radius {} differs from r = {r}", part.radius())));
    }
    Ok(())
}

/// Surface means of `log|ψ|`, `|log|ψ||` and `log⁺|ψ|` on `∂B(0, r)` in one pass.
pub fn sphere_log_integral(sample: &GafSample, r: f64, part: &SpherePartition) -> Result<SphereLogIntegral> {
    check_partition(sample, r, part)?;
    let f = |x: &[f64]| sample.log_abs(&complex_point(x));
    let est = surface_integrals(f, &[&|v| v, &|v: f64| v.abs(), &|v: f64| v.max(0.0)], part)?;
    Ok(SphereLogIntegral { radius: r, mean_log: est[0], mean_abs_log: est[1], log_plus: est[2] })
}

/// `T(ψ, r)`: surface mean of `max(log|ψ|, 0)`.
pub fn nevanlinna_t(sample: &GafSample, r: f64, part: &SpherePartition) -> Result<IntegralEstimate> {
    check_partition(sample, r, part)?;
    let f = |x: &[f64]| sample.log_abs(&complex_point(x));
    Ok(surface_integrals(f, &[&|v: f64| v.max(0.0)], part)?[0])
}

/// Counting function from the centered log-radius difference of `A`.
///
/// `ν = (A(re^h) - A(re^{-h}))/(2h)` is the band average of the count over
/// `[re^{-h}, re^h]`, not its value at `r`. The error bar adds the quadrature
/// indicators, scaled by `1/(2h)`, to the change seen when `h` is halved.
/// Negative values, which only quadrature error can produce, are clamped to 0.
pub fn counting_from_jensen(sample: &GafSample, r: f64, h: f64, m: usize) -> Result<CountingEstimate> {
    if !(h > 0.0 && h <= MAX_H) {
        return Err(Error::Domain(format!("half-step h = {h} outside (0, {MAX_H}]")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius {r} must be positive and finite")));
    }
    let base = partition_sphere(2 * sample.n(), m, 1.0)?;
    let mean_at = |radius: f64| -> Result<IntegralEstimate> {
        Ok(sphere_log_integral(sample, radius, &base.with_radius(radius)?)?.mean_log)
    };
    let slope = |step: f64| -> Result<(f64, f64)> {
        let hi = mean_at(r * step.exp())?;
        let lo = mean_at(r * (-step).exp())?;
        Ok(((hi.value - lo.value) / (2.0 * step), (hi.error + lo.error) / (2.0 * step)))
    };
    let (nu, quad_err) = slope(h)?;
    let (nu_half, _) = slope(0.5 * h)?;
    Ok(CountingEstimate::new(r, nu.max(0.0), Method::Jensen, quad_err + (nu - nu_half).abs()))
}
