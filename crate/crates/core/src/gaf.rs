//! The truncated random entire function `ψ(z) = Σ_{|j|≤J} ω_j z^j / √(j!)`.
//!
//! Evaluation runs through a scaled pathway that computes
//! `ψ(z)·e^{-|z|²/2}` with every monomial factor bounded by one, so both the
//! direct value and `log|ψ|` stay finite far beyond the `f64` range of `|ψ|`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff::{self, ln_factorial, CoefficientTable, IndexSet, Seed};
use crate::error::{Error, Result};
use crate::sum::{ComplexCompensatedSum, CompensatedSum};

/// Largest degree cap `choose_degree` will return.
pub const MAX_DEGREE: usize = 1 << 16;

/// Index set plus the per-index weights `1/√(j!)`; shared by every sample of one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GafBasis {
    indices: Arc<IndexSet>,
    scale: Vec<f64>,
}

impl GafBasis {
    pub fn new(n: usize, degree: usize) -> Result<Arc<Self>> {
        let indices = Arc::new(IndexSet::new(n, degree)?);
        Ok(Arc::new(Self::from_indices(indices)))
    }

    fn from_indices(indices: Arc<IndexSet>) -> Self {
        // ln(j!) from a running log-factorial table; j! itself overflows past 170.
        let mut ln_fact = Vec::with_capacity(indices.degree() + 1);
        let mut acc = CompensatedSum::new();
        ln_fact.push(0.0);
        for e in 1..=indices.degree() {
            acc.add((e as f64).ln());
            ln_fact.push(acc.value());
        }
        let scale = (0..indices.len())
            .map(|rank| {
                let ln_jfact: f64 = indices.entries(rank).iter().map(|&e| ln_fact[e as usize]).sum();
                (-0.5 * ln_jfact).exp()
            })
            .collect();
        Self { indices, scale }
    }

    pub fn n(&self) -> usize {
        self.indices.n()
    }

    pub fn degree(&self) -> usize {
        self.indices.degree()
    }

    pub fn indices(&self) -> &Arc<IndexSet> {
        &self.indices
    }

    /// `1/√(j!)` per graded-lex rank.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }
}

/// One truncated realization of the Gaussian analytic function.
#[derive(Debug, Clone)]
pub struct GafSample {
    basis: Arc<GafBasis>,
    coeffs: CoefficientTable,
    seed: Seed,
}

impl GafSample {
    /// Draws the sample keyed by `seed`.
    pub fn sample(seed: Seed, n: usize, degree: usize) -> Result<Self> {
        let basis = GafBasis::new(n, degree)?;
        Ok(Self::draw(seed, &basis))
    }

    pub fn draw(seed: Seed, basis: &Arc<GafBasis>) -> Self {
        let coeffs = coeff::sample_on(seed, Arc::clone(basis.indices()));
        Self { basis: Arc::clone(basis), coeffs, seed }
    }

    /// Wraps an explicit coefficient table (deterministic test functions, controls).
    pub fn from_table(coeffs: CoefficientTable, seed: Seed) -> Self {
        let basis = Arc::new(GafBasis::from_indices(Arc::clone(coeffs.indices())));
        Self { basis, coeffs, seed }
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn basis(&self) -> &Arc<GafBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &CoefficientTable {
        &self.coeffs
    }

    fn check_point(&self, z: &[Complex64]) {
        assert_eq!(z.len(), self.n(), "point dimension does not match sample dimension");
    }

    /// `ψ(z)·e^{-|z|²/2}`, summed grade by grade with compensation.
    pub fn scaled_value(&self, z: &[Complex64]) -> Complex64 {
        self.check_point(z);
        let degree = self.degree();
        let omega = self.coeffs.values();
        if self.n() == 1 {
            let powers = scaled_powers(z[0], degree);
            let mut acc = ComplexCompensatedSum::new();
            for (w, q) in omega.iter().zip(&powers) {
                acc.add(w * q);
            }
            return acc.value();
        }
        let tables: Vec<Vec<Complex64>> = z.iter().map(|&zk| scaled_powers(zk, degree)).collect();
        let indices = self.basis.indices();
        let mut total = ComplexCompensatedSum::new();
        for k in 0..=degree {
            let mut grade = ComplexCompensatedSum::new();
            for rank in indices.grade(k) {
                let mut term = omega[rank];
                for (table, &e) in tables.iter().zip(indices.entries(rank)) {
                    term *= table[e as usize];
                }
                grade.add(term);
            }
            total.add(grade.value());
        }
        total.value()
    }

    /// `ψ(z)`; overflows to infinity only when `|ψ(z)|` itself exceeds the `f64` range.
    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        let s = self.scaled_value(z);
        let half_norm = 0.5 * norm_sqr(z);
        if half_norm < 700.0 {
            s * half_norm.exp()
        } else {
            let ln_mag = s.norm().ln() + half_norm;
            Complex64::from_polar(ln_mag.exp(), s.arg())
        }
    }

    /// `log|ψ(z)|`, or `-∞` when the scaled sum is exactly zero.
    pub fn log_abs(&self, z: &[Complex64]) -> f64 {
        let s = self.scaled_value(z);
        if s.re == 0.0 && s.im == 0.0 {
            return f64::NEG_INFINITY;
        }
        s.norm().ln() + 0.5 * norm_sqr(z)
    }

    /// `log|ψ(z)| - |z|²/2` directly from the scaled pathway.
    pub fn log_abs_shifted(&self, z: &[Complex64]) -> f64 {
        let s = self.scaled_value(z);
        if s.re == 0.0 && s.im == 0.0 {
            return f64::NEG_INFINITY;
        }
        s.norm().ln()
    }

    /// Coefficients `c_k = Σ_{|j|=k} ω_j u^j/√(j!)` of `t ↦ ψ(t·u)`.
    pub fn restrict_to_line(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_point(u);
        let len = norm_sqr(u).sqrt();
        if !((len - 1.0).abs() <= 1e-12) {
            return Err(Error::Precondition(format!("direction has norm {len}, expected 1")));
        }
        let degree = self.degree();
        let omega = self.coeffs.values();
        let scale = self.basis.scale();
        if self.n() == 1 {
            let mut power = Complex64::new(1.0, 0.0);
            return Ok((0..=degree)
                .map(|k| {
                    let c = omega[k] * scale[k] * power;
                    power *= u[0];
                    c
                })
                .collect());
        }
        let tables: Vec<Vec<Complex64>> = u
            .iter()
            .map(|&uk| {
                std::iter::successors(Some(Complex64::new(1.0, 0.0)), |p| Some(p * uk))
                    .take(degree + 1)
                    .collect()
            })
            .collect();
        let indices = self.basis.indices();
        Ok((0..=degree)
            .map(|k| {
                let mut acc = ComplexCompensatedSum::new();
                for rank in indices.grade(k) {
                    let mut term = omega[rank] * scale[rank];
                    for (table, &e) in tables.iter().zip(indices.entries(rank)) {
                        term *= table[e as usize];
                    }
                    acc.add(term);
                }
                acc.value()
            })
            .collect())
    }

    /// Power-series coefficients `ω_k/√(k!)` of a one-variable sample.
    pub fn polynomial(&self) -> Result<Vec<Complex64>> {
        if self.n() != 1 {
            return Err(Error::Precondition("polynomial() needs a one-variable sample".into()));
        }
        Ok(self
            .coeffs
            .values()
            .iter()
            .zip(self.basis.scale())
            .map(|(w, s)| w * s)
            .collect())
    }
}

/// `(x_0 + i x_1, x_2 + i x_3, …)`: a point of `R^{2n}` read as a point of `C^n`.
pub fn complex_point(x: &[f64]) -> Vec<Complex64> {
    assert!(x.len() % 2 == 0, "real dimension must be even");
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

pub(crate) fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// `q[e] = z^e/√(e!)·e^{-|z|²/2}` for `e = 0..=degree`.
///
/// Seeded at the peak `e ≈ |z|²`, where the log-form is evaluated once, then
/// extended by the power recurrence in both directions; every entry is ≤ 1.
pub fn scaled_powers(z: Complex64, degree: usize) -> Vec<Complex64> {
    let mut q = vec![Complex64::new(0.0, 0.0); degree + 1];
    let rho2 = z.norm_sqr();
    if rho2 == 0.0 {
        q[0] = Complex64::new(1.0, 0.0);
        return q;
    }
    let peak = (rho2.floor() as usize).min(degree);
    let ln_mag = 0.5 * peak as f64 * rho2.ln() - 0.5 * ln_factorial(peak) - 0.5 * rho2;
    q[peak] = Complex64::from_polar(ln_mag.exp(), peak as f64 * z.arg());
    for e in peak + 1..=degree {
        q[e] = q[e - 1] * z / (e as f64).sqrt();
    }
    for e in (1..=peak).rev() {
        q[e - 1] = q[e] * (e as f64).sqrt() / z;
    }
    q
}

/// Certified bound on the truncation tail over the closed ball `B(0, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub degree: usize,
    pub radius: f64,
    /// Upper bound on `Σ_{|j|>J} |ω_j| |z^j|/√(j!)` when every tail coefficient obeys `|ω_j| ≤ 2^{|j|/2}`.
    pub bound: f64,
    /// Probability of that coefficient event.
    pub confidence: f64,
    /// `1 - confidence`, kept separately because it underflows `confidence` to exactly 1.
    pub failure_probability: f64,
}

/// Smallest degree cap the majorant series accepts at radius `r`: `⌈2e·n·r²⌉`.
pub fn degree_threshold(n: usize, r: f64) -> usize {
    (2.0 * std::f64::consts::E * n as f64 * r * r).ceil() as usize
}

fn ln_binomial(top: usize, bottom: usize) -> f64 {
    // small `bottom` (= n - 1) keeps this a short product
    (1..=bottom).map(|i| ((top - bottom + i) as f64 / i as f64).ln()).sum()
}

/// Logarithm of the grade-`k` majorant `C(k+n-1, n-1)·(2e·n·r²/k)^{k/2}`.
///
/// Per grade, `|z^j| ≤ r^k` on the ball, `|ω_j| ≤ 2^{k/2}` on the event, and
/// `j! ≥ Π j_i^{j_i} e^{-j_i} ≥ (k/(n e))^k` by Stirling and `k^k/j^j ≤ n^k`.
fn ln_majorant(n: usize, r: f64, k: usize) -> f64 {
    let kf = k as f64;
    ln_binomial(k + n - 1, n - 1) + 0.5 * kf * (2.0 * std::f64::consts::E * n as f64 * r * r / kf).ln()
}

pub fn tail_bound(n: usize, degree: usize, r: f64) -> Result<TailBound> {
    if n == 0 {
        return Err(Error::Domain("dimension n must be at least 1".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius {r} must be positive and finite")));
    }
    let minimum = degree_threshold(n, r);
    if degree < minimum {
        return Err(Error::DegreeTooSmall { degree, minimum });
    }

    let mut partial = CompensatedSum::new();
    let mut k = degree + 1;
    let mut remainder = f64::INFINITY;
    while k < degree + 1 + (1 << 20) {
        partial.add(ln_majorant(n, r, k).exp());
        let ln_next = ln_majorant(n, r, k + 1);
        let ratio = (ln_majorant(n, r, k + 2) - ln_next).exp();
        // Majorant ratios decrease in k, so the rest is dominated by a geometric series.
        if ratio < 1.0 {
            remainder = ln_next.exp() / (1.0 - ratio);
            if remainder <= 1e-3 * partial.value() {
                break;
            }
        }
        k += 1;
    }
    let bound = partial.value() + remainder;

    let mut failure = CompensatedSum::new();
    for k in degree + 1.. {
        let ln_term = ln_binomial(k + n - 1, n - 1) - 2f64.powi(k.min(1100) as i32);
        if ln_term < -745.0 {
            break;
        }
        failure.add(ln_term.exp());
    }
    let failure_probability = failure.value();

    Ok(TailBound {
        degree,
        radius: r,
        bound,
        confidence: 1.0 - failure_probability,
        failure_probability,
    })
}

/// Smallest degree cap with `tail_bound(n, J, r).bound ≤ eps` (never below the threshold + 1).
pub fn choose_degree(n: usize, r: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("target bound {eps} must be positive")));
    }
    let floor = degree_threshold(n, r) + 1;
    let within = |degree: usize| -> Result<bool> {
        if degree > MAX_DEGREE {
            return Err(Error::Capacity(format!("degree cap would exceed {MAX_DEGREE}")));
        }
        coeff::index_count(n, degree)?;
        Ok(tail_bound(n, degree, r)?.bound <= eps)
    };
    if within(floor)? {
        return Ok(floor);
    }
    let mut failing = floor;
    let mut step = 1;
    let mut passing = loop {
        let candidate = floor + step;
        if within(candidate)? {
            break candidate;
        }
        failing = candidate;
        step *= 2;
    };
    while passing - failing > 1 {
        let mid = failing + (passing - failing) / 2;
        if within(mid)? {
            passing = mid;
        } else {
            failing = mid;
        }
    }
    Ok(passing)
}
