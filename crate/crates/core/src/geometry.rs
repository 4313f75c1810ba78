//! Sphere partitions, normalized surface quadrature, and the Poisson kernel
//! of a Euclidean ball in `R^d`, `d = 2n`.
//!
//! A partition surrounds `S_r` with the `2d` facets of the cube `[-r, r]^d`,
//! cuts each facet into `m^{d-1}` equal subcubes, and projects those radially
//! onto the sphere. Cell measures are solid angles, integrated from the
//! projection Jacobian `|y|^{-d}` on the facet `y_axis = ±1`, normalized so
//! the whole sphere has measure one.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Largest partition `partition_sphere` will build.
pub const MAX_CELLS: usize = 1 << 24;

/// Local refinement depth for cells whose representative hits a `-∞` integrand.
const MAX_REFINE_LEVELS: usize = 3;

/// Relative accuracy targeted for every cell measure.
const MEASURE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// `2·axis` for the facet `y_axis = +1`, `2·axis + 1` for `y_axis = -1`.
    pub facet: usize,
    /// Subcube corners in facet coordinates (the `d - 1` non-axis coordinates, in `[-1, 1]`).
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Projected subcube center, on `S_r`.
    pub representative: Vec<f64>,
    /// Normalized measure `σ_r(I_j)`.
    pub measure: f64,
    pub diameter_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePartition {
    d: usize,
    m: usize,
    r: f64,
    cells: Vec<Cell>,
}

impl SpherePartition {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn representatives(&self) -> impl Iterator<Item = &[f64]> {
        self.cells.iter().map(|c| c.representative.as_slice())
    }

    /// The same cells on a sphere of another radius (measures are scale free).
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        check_radius(r)?;
        let factor = r / self.r;
        let cells = self
            .cells
            .iter()
            .map(|c| Cell {
                representative: c.representative.iter().map(|x| x * factor).collect(),
                diameter_bound: c.diameter_bound * factor,
                ..c.clone()
            })
            .collect();
        Ok(Self { d: self.d, m: self.m, r, cells })
    }

    /// The `m → 2m` refinement used for error indicators.
    pub fn refined(&self) -> Result<Self> {
        partition_sphere(self.d, 2 * self.m, self.r)
    }

    /// Index of the cell containing the direction of `x` (ties go to the lower axis and lower subcube).
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.d {
            return None;
        }
        let (axis, peak) = x
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        if peak == 0.0 {
            return None;
        }
        let facet = 2 * axis + usize::from(x[axis] < 0.0);
        let mut offset = 0;
        for (i, &v) in x.iter().enumerate() {
            if i == axis {
                continue;
            }
            let t = v / peak;
            let slot = (((t + 1.0) * 0.5 * self.m as f64).floor() as isize).clamp(0, self.m as isize - 1);
            offset = offset * self.m + slot as usize;
        }
        Some(facet * self.m.pow(self.d as u32 - 1) + offset)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius {r} must be positive and finite")))
    }
}

/// Normalized surface area `|S^{d-1}| = 2π^{d/2}/Γ(d/2)`.
fn sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0)
}

fn facet_point(d: usize, facet: usize, t: &[f64]) -> Vec<f64> {
    let axis = facet / 2;
    let sign = if facet % 2 == 0 { 1.0 } else { -1.0 };
    let mut y = Vec::with_capacity(d);
    let mut rest = t.iter();
    for i in 0..d {
        y.push(if i == axis { sign } else { *rest.next().unwrap() });
    }
    y
}

fn project(y: &[f64], r: f64) -> Vec<f64> {
    let len = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    y.iter().map(|v| r * v / len).collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_k`.
fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            deriv = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / deriv;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
    }
    (nodes, weights)
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Tensor-product rule over a box for the solid-angle density `(1 + |t|²)^{-d/2}`.
fn tensor_integral(rule: &Rule, d: usize, lo: &[f64], hi: &[f64]) -> f64 {
    let dim = lo.len();
    let k = rule.nodes.len();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b + a)).collect();
    let mut slot = vec![0usize; dim];
    let mut acc = CompensatedSum::new();
    loop {
        let mut w = 1.0;
        let mut norm2 = 1.0;
        for i in 0..dim {
            let t = mid[i] + half[i] * rule.nodes[slot[i]];
            norm2 += t * t;
            w *= rule.weights[slot[i]];
        }
        acc.add(w * norm2.powf(-0.5 * d as f64));
        // odometer over the tensor grid
        let mut i = 0;
        loop {
            if i == dim {
                let volume: f64 = half.iter().product();
                return acc.value() * volume;
            }
            slot[i] += 1;
            if slot[i] < k {
                break;
            }
            slot[i] = 0;
            i += 1;
        }
    }
}

fn adaptive_box_integral(rules: &(Rule, Rule), d: usize, lo: &[f64], hi: &[f64], depth: usize) -> f64 {
    let fine = tensor_integral(&rules.0, d, lo, hi);
    let coarse = tensor_integral(&rules.1, d, lo, hi);
    let max_depth = if lo.len() <= 3 { 4 } else { 2 };
    if (fine - coarse).abs() <= MEASURE_TOLERANCE * fine.abs() || depth >= max_depth {
        return fine;
    }
    let dim = lo.len();
    let mut acc = CompensatedSum::new();
    for child in 0..(1usize << dim) {
        let mut clo = lo.to_vec();
        let mut chi = hi.to_vec();
        for i in 0..dim {
            let mid = 0.5 * (lo[i] + hi[i]);
            if child >> i & 1 == 0 {
                chi[i] = mid;
            } else {
                clo[i] = mid;
            }
        }
        acc.add(adaptive_box_integral(rules, d, &clo, &chi, depth + 1));
    }
    acc.value()
}

fn rules_for(dim: usize) -> (Rule, Rule) {
    let (fine, coarse) = if dim <= 3 { (10, 7) } else { (5, 4) };
    let mk = |k| {
        let (nodes, weights) = gauss_legendre(k);
        Rule { nodes, weights }
    };
    (mk(fine), mk(coarse))
}

/// Normalized measure of the radial projection of the facet box `[lo, hi]`.
pub fn box_measure(d: usize, lo: &[f64], hi: &[f64]) -> f64 {
    let rules = rules_for(d - 1);
    adaptive_box_integral(&rules, d, lo, hi, 0) / sphere_area(d)
}

/// Per-subcube measures of one facet, row-major over the `d - 1` facet coordinates.
/// Every facet carries the same values, so they are computed once per `(d, m)`.
fn facet_measures(d: usize, m: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(d, m)) {
        return Arc::clone(hit);
    }
    let dim = d - 1;
    let rules = rules_for(dim);
    let area = sphere_area(d);
    let count = m.pow(dim as u32);
    let measures: Vec<f64> = (0..count)
        .map(|flat| {
            let (lo, hi) = subcube(flat, dim, m);
            adaptive_box_integral(&rules, d, &lo, &hi, 0) / area
        })
        .collect();
    let measures = Arc::new(measures);
    cache.lock().unwrap().insert((d, m), Arc::clone(&measures));
    measures
}

fn subcube(flat: usize, dim: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let side = 2.0 / m as f64;
    let mut lo = vec![0.0; dim];
    let mut rest = flat;
    for i in (0..dim).rev() {
        let slot = rest % m;
        rest /= m;
        lo[i] = -1.0 + side * slot as f64;
    }
    let hi = lo.iter().map(|a| a + side).collect();
    (lo, hi)
}

/// Partition of `S_r ⊂ R^d` into `2d·m^{d-1}` radially projected facet subcubes.
pub fn partition_sphere(d: usize, m: usize, r: f64) -> Result<SpherePartition> {
    if d < 2 || d % 2 != 0 {
        return Err(Error::Domain(format!("real dimension {d} must be even and at least 2")));
    }
    if m == 0 {
        return Err(Error::Domain("subdivision parameter m must be at least 1".into()));
    }
    check_radius(r)?;
    let dim = d - 1;
    let per_facet = (m as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if per_facet.saturating_mul(2 * d as u128) > MAX_CELLS as u128 {
        return Err(Error::Capacity(format!("partition with d={d}, m={m} exceeds {MAX_CELLS} cells")));
    }
    let per_facet = per_facet as usize;
    let measures = facet_measures(d, m);
    let diameter_bound = (dim as f64).sqrt() * 2.0 * r / m as f64;
    let mut cells = Vec::with_capacity(2 * d * per_facet);
    for facet in 0..2 * d {
        for flat in 0..per_facet {
            let (lo, hi) = subcube(flat, dim, m);
            let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let representative = project(&facet_point(d, facet, &center), r);
            cells.push(Cell { facet, lo, hi, representative, measure: measures[flat], diameter_bound });
        }
    }
    Ok(SpherePartition { d, m, r, cells })
}

/// Quadrature value with the `m → 2m` error indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error: f64,
}

/// `Σ_j σ_j f(x_j)`; cells whose representative gives `-∞` are subdivided locally.
pub fn riemann_sum<F>(f: F, part: &SpherePartition) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    Ok(riemann_sums(f, &[&|v| v], part)?[0])
}

/// Several Riemann sums `Σ_j σ_j g_i(f(x_j))` sharing one evaluation of `f` per node.
///
/// Singularity handling keys off `f`: a `-∞` value refines that cell locally,
/// up to three levels, before giving up with [`Error::SingularNode`].
pub fn riemann_sums<F>(f: F, transforms: &[&dyn Fn(f64) -> f64], part: &SpherePartition) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut acc = vec![CompensatedSum::new(); transforms.len()];
    for cell in &part.cells {
        let value = f(&cell.representative);
        if value == f64::NEG_INFINITY {
            let sub = refine_cell(&f, transforms, part.d, part.r, cell.facet, &cell.lo, &cell.hi, 1)?;
            for (a, s) in acc.iter_mut().zip(sub) {
                a.add(s);
            }
        } else if value.is_finite() {
            for (a, g) in acc.iter_mut().zip(transforms) {
                a.add(cell.measure * g(value));
            }
        } else {
            return Err(Error::Domain(format!("integrand returned {value} on a quadrature node")));
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

#[allow(clippy::too_many_arguments)]
fn refine_cell<F>(
    f: &F,
    transforms: &[&dyn Fn(f64) -> f64],
    d: usize,
    r: f64,
    facet: usize,
    lo: &[f64],
    hi: &[f64],
    level: usize,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if level > MAX_REFINE_LEVELS {
        return Err(Error::SingularNode);
    }
    let dim = lo.len();
    let mut acc = vec![CompensatedSum::new(); transforms.len()];
    for child in 0..(1usize << dim) {
        let mut clo = lo.to_vec();
        let mut chi = hi.to_vec();
        for i in 0..dim {
            let mid = 0.5 * (lo[i] + hi[i]);
            if child >> i & 1 == 0 {
                chi[i] = mid;
            } else {
                clo[i] = mid;
            }
        }
        let center: Vec<f64> = clo.iter().zip(&chi).map(|(a, b)| 0.5 * (a + b)).collect();
        let value = f(&project(&facet_point(d, facet, &center), r));
        if value == f64::NEG_INFINITY {
            let sub = refine_cell(f, transforms, d, r, facet, &clo, &chi, level + 1)?;
            for (a, s) in acc.iter_mut().zip(sub) {
                a.add(s);
            }
        } else if value.is_finite() {
            let measure = box_measure(d, &clo, &chi);
            for (a, g) in acc.iter_mut().zip(transforms) {
                a.add(measure * g(value));
            }
        } else {
            return Err(Error::Domain(format!("integrand returned {value} on a quadrature node")));
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

/// Normalized surface integral with error indicator `|Q_m - Q_{2m}|/2`.
pub fn surface_integral<F>(f: F, part: &SpherePartition) -> Result<IntegralEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    Ok(surface_integrals(f, &[&|v| v], part)?[0])
}

/// [`surface_integral`] for several transforms of one integrand.
pub fn surface_integrals<F>(
    f: F,
    transforms: &[&dyn Fn(f64) -> f64],
    part: &SpherePartition,
) -> Result<Vec<IntegralEstimate>>
where
    F: Fn(&[f64]) -> f64,
{
    let coarse = riemann_sums(&f, transforms, part)?;
    let fine = riemann_sums(&f, transforms, &part.refined()?)?;
    Ok(coarse
        .into_iter()
        .zip(fine)
        .map(|(value, fine)| IntegralEstimate { value, error: 0.5 * (value - fine).abs() })
        .collect())
}

/// Interior point `ζ`, boundary point `z`, radius `r` in `R^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonKernelQuery {
    zeta: Vec<f64>,
    z: Vec<f64>,
    r: f64,
}

impl PoissonKernelQuery {
    pub fn new(zeta: Vec<f64>, z: Vec<f64>, r: f64) -> Result<Self> {
        check_radius(r)?;
        if zeta.len() != z.len() || zeta.len() < 2 || zeta.len() % 2 != 0 {
            return Err(Error::Domain("ζ and z must share an even real dimension ≥ 2".into()));
        }
        let zeta_norm = norm(&zeta);
        if !(zeta_norm < r) {
            return Err(Error::Domain(format!("|ζ| = {zeta_norm} is not inside the ball of radius {r}")));
        }
        let z_norm = norm(&z);
        if !((z_norm - r).abs() <= 1e-9 * r) {
            return Err(Error::Domain(format!("|z| = {z_norm} is not on the sphere of radius {r}")));
        }
        Ok(Self { zeta, z, r })
    }

    /// Complex dimension `n`.
    pub fn n(&self) -> usize {
        self.zeta.len() / 2
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `P_r(ζ, z) = r^{2n-2}(r² - |ζ|²)/|ζ - z|^{2n}` for the normalized measure on `S_r`.
pub fn poisson_kernel(q: &PoissonKernelQuery) -> f64 {
    kernel_unchecked(&q.zeta, &q.z, q.r)
}

pub(crate) fn kernel_unchecked(zeta: &[f64], z: &[f64], r: f64) -> f64 {
    let n = zeta.len() as i32 / 2;
    let zeta2: f64 = zeta.iter().map(|v| v * v).sum();
    let dist2: f64 = zeta.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    r.powi(2 * n - 2) * (r * r - zeta2) / dist2.powi(n)
}

/// `∫_{S_r} P_r(ζ, ·) h dσ_r`, which reproduces `h(ζ)` for harmonic `h`.
pub fn harmonic_reproduce<H>(h: H, zeta: &[f64], part: &SpherePartition) -> Result<IntegralEstimate>
where
    H: Fn(&[f64]) -> f64,
{
    let r = part.radius();
    if zeta.len() != part.d() {
        return Err(Error::Domain("ζ dimension does not match the partition".into()));
    }
    if norm(zeta) > 0.9 * r {
        return Err(Error::Domain(format!("|ζ| = {} exceeds 0.9·r = {}", norm(zeta), 0.9 * r)));
    }
    surface_integral(|x| kernel_unchecked(zeta, x, r) * h(x), part)
}

/// `∫_{S_{κr}} P_r(w, z) dσ_{κr}(w)` for `|z| = r`; equals one for every `κ < 1`.
pub fn kernel_second_normalization(kappa: f64, z: &[f64], part_inner: &SpherePartition) -> Result<IntegralEstimate> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("κ = {kappa} outside (0, 1)")));
    }
    let r = part_inner.radius() / kappa;
    if z.len() != part_inner.d() || (norm(z) - r).abs() > 1e-9 * r {
        return Err(Error::Domain(format!("z must lie on the sphere of radius {r}")));
    }
    surface_integral(|w| kernel_unchecked(w, z, r), part_inner)
}
