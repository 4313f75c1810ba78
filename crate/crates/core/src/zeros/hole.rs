//! Hole detection: does `ψ` vanish somewhere in `B(0, r)`?

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::roots::{companion_roots, root_in_disk};
use super::winding::{count_zeros_with_retry, DEFAULT_INITIAL_NODES};
use crate::coeff::{complex_gaussian, Stream};
use crate::error::{Error, Result};
use crate::gaf::{norm_sqr, GafSample};

/// Line count used when the caller has no preference.
pub const DEFAULT_LINES: usize = 256;
/// Diagnostic grid points per complex coordinate (a 4×4 lattice).
const GRID_SIDE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Hole,
    NotHole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleVerdict {
    pub verdict: Verdict,
    /// A zero inside the ball; present exactly when the verdict is `NotHole`.
    pub witness: Option<Vec<Complex64>>,
    pub lines_tested: usize,
    /// `min |ψ|` over the `16^n` diagnostic grid, `NaN` when the grid was skipped.
    pub min_modulus_on_grid: f64,
}

impl HoleVerdict {
    pub fn is_hole(&self) -> bool {
        self.verdict == Verdict::Hole
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleTestOptions {
    /// Directions tried for `n ≥ 2`; ignored for `n = 1`.
    pub lines: usize,
    /// First trapezoidal level of each winding count.
    pub initial_nodes: usize,
    pub grid_diagnostic: bool,
}

impl Default for HoleTestOptions {
    fn default() -> Self {
        Self { lines: DEFAULT_LINES, initial_nodes: DEFAULT_INITIAL_NODES, grid_diagnostic: true }
    }
}

impl HoleTestOptions {
    pub fn with_lines(lines: usize) -> Self {
        Self { lines, ..Self::default() }
    }
}

/// The `l`-th direction of a sample: a normalized complex Gaussian vector.
///
/// Directions are drawn in order from the sample's own direction stream, so
/// the first `L` directions of a `2L`-line test are those of the `L`-line test.
pub fn directions(sample: &GafSample, count: usize) -> Vec<Vec<Complex64>> {
    let mut rng = sample.seed().rng(Stream::Directions);
    let n = sample.n();
    (0..count)
        .map(|_| loop {
            let g: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
            let len = norm_sqr(&g).sqrt();
            if len > 0.0 {
                break g.iter().map(|c| c / len).collect();
            }
        })
        .collect()
}

/// Smallest `|ψ|` on the product lattice `{x + iy : x, y ∈ grid}^n ⊂ B̄(0, r)`.
fn grid_minimum(sample: &GafSample, r: f64) -> f64 {
    let n = sample.n();
    let a = r / (2.0 * n as f64).sqrt();
    let side: Vec<f64> = (0..GRID_SIDE)
        .map(|i| -a + 2.0 * a * i as f64 / (GRID_SIDE - 1) as f64)
        .collect();
    let per_coord: Vec<Complex64> =
        side.iter().flat_map(|&x| side.iter().map(move |&y| Complex64::new(x, y))).collect();
    let total = per_coord.len().pow(n as u32);
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    let mut best = f64::INFINITY;
    for flat in 0..total {
        let mut rest = flat;
        for zk in z.iter_mut() {
            *zk = per_coord[rest % per_coord.len()];
            rest /= per_coord.len();
        }
        best = best.min(sample.evaluate(&z).norm());
    }
    best
}

/// Root of `poly` inside radius `r`, falling back to the smallest-modulus root
/// when the winding count and the root finder disagree at the boundary.
fn witness_on_line(poly: &[Complex64], r: f64) -> Result<Complex64> {
    if let Some(root) = root_in_disk(poly, r)? {
        return Ok(root);
    }
    companion_roots(poly)?
        .into_iter()
        .min_by(|x, y| x.norm().total_cmp(&y.norm()))
        .ok_or_else(|| Error::RootFinding("positive winding count but no roots".into()))
}

/// Decides whether the sample has a zero in `B(0, r)`.
///
/// For `n = 1` the answer comes from the exact winding count of the sample's
/// polynomial. For `n ≥ 2` every zero lies on some complex line through the
/// origin, so lines are sliced in order and the first zero-containing one wins.
/// A `Hole` verdict for `n ≥ 2` can therefore be wrong when the zero set meets
/// the ball only in directions none of the lines hit.
pub fn hole_test(sample: &GafSample, r: f64, opts: &HoleTestOptions) -> Result<HoleVerdict> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius {r} must be positive and finite")));
    }
    let n = sample.n();
    if n >= 2 && opts.lines == 0 {
        return Err(Error::Domain("at least one line is required".into()));
    }
    let min_modulus_on_grid = if opts.grid_diagnostic { grid_minimum(sample, r) } else { f64::NAN };
    let mut retry_rng = sample.seed().rng(Stream::Perturbation);

    let lines: Vec<Vec<Complex64>> =
        if n == 1 { vec![vec![Complex64::new(1.0, 0.0)]] } else { directions(sample, opts.lines) };
    for (l, u) in lines.iter().enumerate() {
        let poly = sample.restrict_to_line(u)?;
        if poly.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
            // ψ vanishes on the whole line, in particular at the origin.
            return Ok(HoleVerdict {
                verdict: Verdict::NotHole,
                witness: Some(vec![Complex64::new(0.0, 0.0); n]),
                lines_tested: l + 1,
                min_modulus_on_grid,
            });
        }
        let (count, radius) = count_zeros_with_retry(&poly, r, opts.initial_nodes, &mut retry_rng)?;
        if count.count > 0 {
            let t = witness_on_line(&poly, radius)?;
            return Ok(HoleVerdict {
                verdict: Verdict::NotHole,
                witness: Some(u.iter().map(|c| c * t).collect()),
                lines_tested: l + 1,
                min_modulus_on_grid,
            });
        }
    }
    Ok(HoleVerdict { verdict: Verdict::Hole, witness: None, lines_tested: lines.len(), min_modulus_on_grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{CoefficientTable, MultiIndex, Seed};

    fn table(n: usize, degree: usize, terms: &[(&[u32], f64)]) -> GafSample {
        let mut t = CoefficientTable::zeros(n, degree).unwrap();
        for (j, c) in terms {
            t.set(&MultiIndex::new(j.to_vec()), Complex64::new(*c, 0.0)).unwrap();
        }
        GafSample::from_table(t, Seed::new(3))
    }

    #[test]
    fn constant_is_a_hole() {
        for n in 1..=3 {
            let psi = table(n, 2, &[(&vec![0; n], 1.0)]);
            for r in [0.5, 5.0] {
                let v = hole_test(&psi, r, &HoleTestOptions::with_lines(8)).unwrap();
                assert!(v.is_hole());
                assert!(v.witness.is_none());
                assert!((v.min_modulus_on_grid - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coordinate_hyperplane() {
        let psi = table(2, 1, &[(&[1, 0], 1.0)]);
        let v = hole_test(&psi, 1.0, &HoleTestOptions::default()).unwrap();
        assert_eq!(v.verdict, Verdict::NotHole);
        assert_eq!(v.lines_tested, 1);
        let w = v.witness.unwrap();
        assert!(norm_sqr(&w).sqrt() < 1e-12);
    }

    #[test]
    fn far_root_in_one_variable() {
        // 1 + 0.1 z: ω_1 = 0.1 since 1! = 1.
        let psi = table(1, 1, &[(&[0], 1.0), (&[1], 0.1)]);
        assert!(hole_test(&psi, 1.0, &HoleTestOptions::default()).unwrap().is_hole());
        let v = hole_test(&psi, 11.0, &HoleTestOptions::default()).unwrap();
        let w = v.witness.unwrap();
        assert!((w[0] + 10.0).norm() < 1e-10);
        assert!(psi.evaluate(&w).norm() < 1e-12);
    }

    #[test]
    fn shifted_hyperplane_needs_the_right_lines() {
        // ψ = z_1 + z_2 - 0.5 meets the unit ball; many directions cross it.
        let psi = table(2, 1, &[(&[0, 0], -0.5), (&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let v = hole_test(&psi, 1.0, &HoleTestOptions::default()).unwrap();
        assert_eq!(v.verdict, Verdict::NotHole);
        let w = v.witness.unwrap();
        assert!(norm_sqr(&w).sqrt() < 1.0);
        assert!(psi.evaluate(&w).norm() < 1e-10);
        // The closest zero has norm 0.5/√2, so a smaller ball is a hole.
        assert!(hole_test(&psi, 0.3, &HoleTestOptions::default()).unwrap().is_hole());
    }

    #[test]
    fn directions_are_prefix_stable_and_unit() {
        let psi = table(3, 1, &[(&[0, 0, 0], 1.0)]);
        let short = directions(&psi, 5);
        let long = directions(&psi, 10);
        assert_eq!(short[..], long[..5]);
        for u in &long {
            assert!((norm_sqr(u) - 1.0).abs() < 1e-14);
        }
    }
}
