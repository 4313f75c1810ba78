//! Growth of `log max_{|z|=r} |ψ(z)|` and the translated maxima used by the
//! invariance experiment.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::stats::mean_variance;
use super::{labels, map_trials, ExperimentConfig, SummaryRow, TrialRecord, TrialResult};
use crate::error::{Error, Result};
use crate::gaf::{complex_point, GafSample};
use crate::geometry::{partition_sphere, SpherePartition, MAX_CELLS};

/// Allowed deviation of `log M/r²` from ½ before a sample counts as an outlier.
pub const OUTLIER_DELTA: f64 = 0.1;
/// Refinement stops once the max moves by less than this multiple of `r²`.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;
const PILOT_SAMPLES: usize = 8;
const INITIAL_M: usize = 4;
const MAX_REFINEMENTS: usize = 10;

/// Max over a node set of a shifted or unshifted `log|ψ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxStat {
    pub radius: f64,
    pub center: Vec<Complex64>,
    pub value: f64,
}

/// `max_j g(ζ + x_j)` over the partition representatives, where `g` is
/// `log|ψ| - |z|²/2` when `shifted` and `log|ψ|` otherwise.
///
/// The node max is a lower bound for the true max over the sphere.
pub fn max_stat(sample: &GafSample, center: &[Complex64], part: &SpherePartition, shifted: bool) -> Result<MaxStat> {
    if center.len() != sample.n() || part.d() != 2 * sample.n() {
        return Err(Error::Precondition("center, partition and sample dimensions disagree".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for x in part.representatives() {
        let z: Vec<Complex64> = complex_point(x).iter().zip(center).map(|(a, b)| a + b).collect();
        let v = if shifted { sample.log_abs_shifted(&z) } else { sample.log_abs(&z) };
        best = best.max(v);
    }
    Ok(MaxStat { radius: part.radius(), center: center.to_vec(), value: best })
}

/// `log M_r = max log|ψ|` over the nodes of `part`.
pub fn log_max_modulus(sample: &GafSample, part: &SpherePartition) -> Result<f64> {
    let origin = vec![Complex64::new(0.0, 0.0); sample.n()];
    Ok(max_stat(sample, &origin, part, false)?.value)
}

/// Doubles `m` until no pilot sample's max moves by `REFINEMENT_TOLERANCE·r²` or more.
pub fn pilot_resolution(pilots: &[GafSample], n: usize, r: f64, start: usize) -> Result<usize> {
    let mut m = start;
    let mut part = partition_sphere(2 * n, m, r)?;
    let mut current: Vec<f64> = pilots.iter().map(|s| log_max_modulus(s, &part)).collect::<Result<_>>()?;
    for _ in 0..MAX_REFINEMENTS {
        let finer = match part.refined() {
            Ok(p) if p.len() <= MAX_CELLS / 4 => p,
            _ => break,
        };
        let next: Vec<f64> = pilots.iter().map(|s| log_max_modulus(s, &finer)).collect::<Result<_>>()?;
        let moved = current.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        m *= 2;
        part = finer;
        current = next;
        if moved < REFINEMENT_TOLERANCE * r * r {
            break;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub radius: f64,
    /// Resolution chosen by the pilot refinement.
    pub m: usize,
    pub trials: usize,
    /// Mean and sample standard deviation of `log M/r²`.
    pub mean: f64,
    pub std: f64,
    pub outliers: usize,
    pub outlier_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub n: usize,
    pub degree: usize,
    pub points: Vec<GrowthPoint>,
    pub records: Vec<TrialRecord>,
}

impl GrowthReport {
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.points
            .iter()
            .map(|p| {
                let half = 1.96 * p.std / (p.trials as f64).sqrt();
                SummaryRow { radius: p.radius, estimate: p.mean, ci_lo: p.mean - half, ci_hi: p.mean + half, trials: p.trials }
            })
            .collect()
    }
}

/// Distribution of `log M_r/r²` per radius; one node set per radius for all samples.
pub fn run_max_growth(cfg: &ExperimentConfig) -> Result<GrowthReport> {
    cfg.validate()?;
    let basis = cfg.basis_for(cfg.max_radius())?;
    let pilots: Vec<GafSample> =
        (0..PILOT_SAMPLES.min(cfg.trials)).map(|t| cfg.trial_sample(labels::GROWTH, t, &basis)).collect();
    let parts: Vec<SpherePartition> = cfg
        .radii
        .iter()
        .map(|&r| {
            let m = match cfg.quadrature_m {
                Some(m) => m,
                None => pilot_resolution(&pilots, cfg.n, r, INITIAL_M)?,
            };
            partition_sphere(2 * cfg.n, m, r)
        })
        .collect::<Result<_>>()?;
    let rows = map_trials(cfg.trials, cfg.workers, |t| {
        let sample = cfg.trial_sample(labels::GROWTH, t, &basis);
        parts
            .iter()
            .map(|part| {
                let start = Instant::now();
                let v = log_max_modulus(&sample, part)?;
                Ok((v, start.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<(f64, f64)>>>()
    })?;

    let mut points = Vec::with_capacity(parts.len());
    let mut records = Vec::with_capacity(cfg.trials * parts.len());
    for (i, part) in parts.iter().enumerate() {
        let r = part.radius();
        let ratios: Vec<f64> = rows.iter().map(|row| row[i].0 / (r * r)).collect();
        for (t, row) in rows.iter().enumerate() {
            records.push(TrialRecord {
                trial: t as u64,
                radius: r,
                result: TrialResult::MaxGrowth { log_max: row[i].0, ratio: ratios[t] },
                seconds: row[i].1,
            });
        }
        let (mean, var) = mean_variance(&ratios);
        let outliers = ratios.iter().filter(|x| (*x - 0.5).abs() > OUTLIER_DELTA).count();
        points.push(GrowthPoint {
            radius: r,
            m: part.m(),
            trials: cfg.trials,
            mean,
            std: var.sqrt(),
            outliers,
            outlier_rate: outliers as f64 / cfg.trials as f64,
        });
    }
    Ok(GrowthReport { n: cfg.n, degree: basis.degree(), points, records })
}
