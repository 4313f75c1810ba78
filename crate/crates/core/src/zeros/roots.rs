//! Root extraction for one-variable polynomials: companion-matrix eigenvalues
//! followed by Newton polishing. Used as the independent oracle for the
//! winding count and to place hole-test witnesses.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITERATIONS: usize = 100_000;
const POLISH_STEPS: usize = 8;
const NEWTON_STEPS: usize = 60;
/// Relative Newton step below which an iteration is treated as converged.
pub const ROOT_TOLERANCE: f64 = 1e-12;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Polynomial `q(w) = p(s·w) / max_k |c_k s^k|` where `s` balances the end coefficients.
struct Balanced {
    coeffs: Vec<Complex64>,
    scale: f64,
}

fn balance(poly: &[Complex64]) -> Balanced {
    let d = poly.len() - 1;
    let ln_s = (poly[0].norm().ln() - poly[d].norm().ln()) / d as f64;
    let ln_mag: Vec<f64> = poly.iter().enumerate().map(|(k, c)| c.norm().ln() + k as f64 * ln_s).collect();
    let peak = ln_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let coeffs = poly
        .iter()
        .zip(&ln_mag)
        .map(|(c, &lm)| if lm == f64::NEG_INFINITY { zero() } else { c / c.norm() * (lm - peak).exp() })
        .collect();
    Balanced { coeffs, scale: ln_s.exp() }
}

fn horner(a: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    let mut p = a[a.len() - 1];
    let mut dp = zero();
    for c in a[..a.len() - 1].iter().rev() {
        dp = dp * w + p;
        p = p * w + c;
    }
    (p, dp)
}

/// Newton steps that are kept only while they reduce `|q|`.
fn polish(a: &[Complex64], mut w: Complex64, steps: usize) -> Complex64 {
    let mut value = horner(a, w).0.norm();
    for _ in 0..steps {
        let (p, dp) = horner(a, w);
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let next = w - p / dp;
        let next_value = horner(a, next).0.norm();
        if !(next_value < value) {
            break;
        }
        let moved = (next - w).norm();
        w = next;
        value = next_value;
        if moved <= ROOT_TOLERANCE * w.norm().max(1.0) {
            break;
        }
    }
    w
}

/// Every root of `poly` (coefficients in ascending order) with multiplicity.
pub fn companion_roots(poly: &[Complex64]) -> Result<Vec<Complex64>> {
    let top = poly.iter().rposition(|c| *c != zero()).ok_or(Error::ZeroPolynomial)?;
    let low = poly.iter().position(|c| *c != zero()).unwrap_or(0);
    let mut roots = vec![zero(); low];
    let core = &poly[low..=top];
    let d = core.len() - 1;
    if d == 0 {
        return Ok(roots);
    }
    let b = balance(core);
    let lead = b.coeffs[d];
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -b.coeffs[i] / lead;
    }
    let schur = Schur::try_new(m, f64::EPSILON, SCHUR_MAX_ITERATIONS)
        .ok_or_else(|| Error::RootFinding(format!("Schur iteration did not converge at degree {d}")))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::RootFinding("Schur form is not triangular".into()))?;
    roots.extend(eig.iter().map(|&w| polish(&b.coeffs, w, POLISH_STEPS) * b.scale));
    Ok(roots)
}

/// Number of roots with `|z| < r`, via [`companion_roots`].
pub fn count_roots_inside(poly: &[Complex64], r: f64) -> Result<usize> {
    Ok(companion_roots(poly)?.iter().filter(|z| z.norm() < r).count())
}

/// Undamped Newton from `start`; the converged point, if any.
fn newton(a: &[Complex64], start: Complex64, bound: f64) -> Option<Complex64> {
    let mut w = start;
    for _ in 0..NEWTON_STEPS {
        let (p, dp) = horner(a, w);
        if dp == zero() || !p.is_finite() {
            return None;
        }
        let step = p / dp;
        w -= step;
        if !(w.norm() < bound) {
            return None;
        }
        if step.norm() <= ROOT_TOLERANCE * w.norm().max(1e-300) {
            return Some(w);
        }
    }
    None
}

/// Newton starts: the origin, then eight points on the circle of radius `r/2`.
const NEWTON_STARTS: usize = 9;

/// A root with `|z| < r`, if one can be found.
///
/// Tries Newton from a few starting points first and falls back to the
/// companion matrix; the smallest-modulus root is returned in the latter case.
pub fn root_in_disk(poly: &[Complex64], r: f64) -> Result<Option<Complex64>> {
    let top = poly.iter().rposition(|c| *c != zero()).ok_or(Error::ZeroPolynomial)?;
    if top == 0 {
        return Ok(None);
    }
    if poly[0] == zero() {
        return Ok(Some(zero()));
    }
    let a = &poly[..=top];
    for k in 0..NEWTON_STARTS {
        let start = if k == 0 {
            zero()
        } else {
            Complex64::from_polar(0.5 * r, std::f64::consts::TAU * (k - 1) as f64 / (NEWTON_STARTS - 1) as f64)
        };
        if let Some(w) = newton(a, start, 2.0 * r) {
            if w.norm() < r {
                return Ok(Some(polish(a, w, POLISH_STEPS)));
            }
        }
    }
    let roots = companion_roots(a)?;
    Ok(roots
        .into_iter()
        .filter(|z| z.norm() < r)
        .min_by(|x, y| x.norm().total_cmp(&y.norm())))
}
