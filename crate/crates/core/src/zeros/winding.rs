//! Argument-principle zero counting for one-variable polynomials.

use num_complex::Complex64;
use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::coeff::unit;
use crate::error::{Error, Result};

/// Node count of the first trapezoidal level.
pub const DEFAULT_INITIAL_NODES: usize = 64;
const MAX_NODES: usize = 1 << 16;
/// `min|p| / max|p|` on the nodes below this reads as a zero on the contour.
const NEAR_ZERO_RATIO: f64 = 1e-12;
/// Successive levels must agree this closely before the count is accepted.
const STABILITY: f64 = 0.05;
/// Largest accepted distance of the winding value from an integer.
const INTEGER_TOLERANCE: f64 = 0.25;
/// Retries with a perturbed radius after a zero-near-contour failure.
pub const MAX_RETRIES: usize = 5;
/// Relative size of a radius perturbation.
pub const PERTURBATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingCount {
    pub count: usize,
    /// Distance of the final quadrature value from `count`.
    pub certificate: f64,
    /// Nodes on the contour at the accepted level.
    pub nodes: usize,
}

/// Coefficients of `w ↦ p(r·w)` normalized to unit max modulus, trailing zeros trimmed.
fn scaled_to_unit_circle(poly: &[Complex64], r: f64) -> Result<Vec<Complex64>> {
    let degree = poly
        .iter()
        .rposition(|c| c.re != 0.0 || c.im != 0.0)
        .ok_or(Error::ZeroPolynomial)?;
    let ln_r = r.ln();
    let ln_mag: Vec<f64> = poly[..=degree]
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm().ln() + k as f64 * ln_r)
        .collect();
    let peak = ln_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(poly[..=degree]
        .iter()
        .zip(&ln_mag)
        .map(|(c, &lm)| if lm == f64::NEG_INFINITY { Complex64::new(0.0, 0.0) } else { c / c.norm() * (lm - peak).exp() })
        .collect())
}

/// `(p(w), p'(w))` by Horner.
#[inline]
fn horner_with_derivative(a: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    let mut p = a[a.len() - 1];
    let mut dp = Complex64::new(0.0, 0.0);
    for c in a[..a.len() - 1].iter().rev() {
        dp = dp * w + p;
        p = p * w + c;
    }
    (p, dp)
}

/// Number of zeros of `poly` in the open disk `|z| < r`.
///
/// Integrates `(1/2πi)∮ p'/p dz` with the trapezoidal rule on `|z| = r`,
/// doubling the node count until two successive levels agree and the value
/// sits close to an integer.
pub fn count_zeros_disk(poly: &[Complex64], r: f64) -> Result<WindingCount> {
    count_zeros_disk_with(poly, r, DEFAULT_INITIAL_NODES)
}

pub fn count_zeros_disk_with(poly: &[Complex64], r: f64, initial_nodes: usize) -> Result<WindingCount> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius {r} must be positive and finite")));
    }
    let a = scaled_to_unit_circle(poly, r)?;
    if a.len() == 1 {
        return Ok(WindingCount { count: 0, certificate: 0.0, nodes: 0 });
    }

    let mut nodes = initial_nodes.max(8).next_power_of_two();
    let mut total = Complex64::new(0.0, 0.0);
    let mut min_abs = f64::INFINITY;
    let mut max_abs = 0.0f64;
    let mut previous: Option<Complex64> = None;
    let mut first = true;
    loop {
        // On refinement only the odd nodes of the doubled grid are new.
        let (start, stride) = if first { (0, 1) } else { (1, 2) };
        let step = std::f64::consts::TAU / nodes as f64;
        let mut m = start;
        while m < nodes {
            let w = Complex64::from_polar(1.0, step * m as f64);
            let (p, dp) = horner_with_derivative(&a, w);
            let abs = p.norm();
            min_abs = min_abs.min(abs);
            max_abs = max_abs.max(abs);
            total += w * dp / p;
            m += stride;
        }
        first = false;
        if !(min_abs >= NEAR_ZERO_RATIO * max_abs) {
            return Err(Error::ZeroNearContour { radius: r });
        }
        let value = total / nodes as f64;
        let nearest = value.re.round().max(0.0);
        let distance = (value - Complex64::new(nearest, 0.0)).norm();
        if let Some(prev) = previous {
            if (value - prev).norm() < STABILITY && distance < INTEGER_TOLERANCE {
                return Ok(WindingCount { count: nearest as usize, certificate: distance, nodes });
            }
        }
        previous = Some(value);
        nodes *= 2;
        if nodes > MAX_NODES {
            return Err(Error::ZeroNearContour { radius: r });
        }
    }
}

/// [`count_zeros_disk`] with up to [`MAX_RETRIES`] randomized radius perturbations.
/// Returns the count together with the radius it was certified on.
pub fn count_zeros_with_retry(
    poly: &[Complex64],
    r: f64,
    initial_nodes: usize,
    rng: &mut impl RngCore,
) -> Result<(WindingCount, f64)> {
    let mut radius = r;
    for attempt in 0..=MAX_RETRIES {
        match count_zeros_disk_with(poly, radius, initial_nodes) {
            Ok(count) => return Ok((count, radius)),
            Err(Error::ZeroNearContour { .. }) if attempt < MAX_RETRIES => {
                radius = r * (1.0 + PERTURBATION * (2.0 * unit(rng.next_u64()) - 1.0));
            }
            Err(Error::ZeroNearContour { .. }) => break,
            Err(other) => return Err(other),
        }
    }
    Err(Error::RetriesExhausted { radius: r, attempts: MAX_RETRIES + 1 })
}
