//! Spherical means of `log|ψ|`, `|log|ψ||` and `log⁺|ψ|`, normalized by `r²`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stats::mean_variance;
use super::{check_invalid_cap, is_trial_failure, labels, map_trials, ExperimentConfig, SummaryRow, TrialRecord, TrialResult};
use crate::error::Result;
use crate::geometry::partition_sphere;
use crate::zeros::jensen::sphere_log_integral;

/// Samples with `A(r)/r²` outside this band count as band violations.
pub const ATHENA_BAND: (f64, f64) = (0.4, 0.6);

fn default_m(n: usize) -> usize {
    match n {
        1 => 64,
        2 => 6,
        _ => 2,
    }
}

/// `3^{2n} + 1`, the bound on the mean of `|log|ψ||` in units of `r²`.
pub fn abs_log_bound(n: usize) -> f64 {
    9f64.powi(n as i32) + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub radius: f64,
    pub trials: usize,
    pub invalid: usize,
    /// Mean and standard deviation of `A(r)/r²`.
    pub mean_log_ratio: f64,
    pub std_log_ratio: f64,
    pub mean_abs_log_ratio: f64,
    /// Mean of `T(ψ, r)/r²`.
    pub mean_log_plus_ratio: f64,
    pub abs_log_bound_violation_rate: f64,
    pub band_violation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReport {
    pub n: usize,
    pub degree: usize,
    pub m: usize,
    pub points: Vec<SurfacePoint>,
    pub records: Vec<TrialRecord>,
}

impl SurfaceReport {
    /// Mean of `A(r)/r²` per radius with a normal 95% interval.
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.points
            .iter()
            .map(|p| {
                let valid = (p.trials - p.invalid) as f64;
                let half = 1.96 * p.std_log_ratio / valid.sqrt();
                SummaryRow {
                    radius: p.radius,
                    estimate: p.mean_log_ratio,
                    ci_lo: p.mean_log_ratio - half,
                    ci_hi: p.mean_log_ratio + half,
                    trials: p.trials,
                }
            })
            .collect()
    }
}

pub fn run_surface_checks(cfg: &ExperimentConfig) -> Result<SurfaceReport> {
    cfg.validate()?;
    let basis = cfg.basis_for(cfg.max_radius())?;
    let m = cfg.quadrature_m.unwrap_or_else(|| default_m(cfg.n));
    let parts = cfg.radii.iter().map(|&r| partition_sphere(2 * cfg.n, m, r)).collect::<Result<Vec<_>>>()?;
    let rows = map_trials(cfg.trials, cfg.workers, |t| {
        let sample = cfg.trial_sample(labels::SURFACE, t, &basis);
        parts
            .iter()
            .map(|part| {
                let start = Instant::now();
                let res = sphere_log_integral(&sample, part.radius(), part);
                let seconds = start.elapsed().as_secs_f64();
                match res {
                    Ok(s) => Ok((Ok([s.mean_log.value, s.mean_abs_log.value, s.log_plus.value]), seconds)),
                    Err(e) if is_trial_failure(&e) => Ok((Err(e.to_string()), seconds)),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<(std::result::Result<[f64; 3], String>, f64)>>>()
    })?;

    let bound = abs_log_bound(cfg.n);
    let mut points = Vec::with_capacity(parts.len());
    let mut records = Vec::with_capacity(cfg.trials * parts.len());
    for (i, &r) in cfg.radii.iter().enumerate() {
        let r2 = r * r;
        let mut a = Vec::with_capacity(cfg.trials);
        let mut abs = Vec::with_capacity(cfg.trials);
        let mut plus = Vec::with_capacity(cfg.trials);
        for (t, row) in rows.iter().enumerate() {
            let (res, seconds) = &row[i];
            let result = match res {
                Ok([mean_log, mean_abs_log, log_plus]) => {
                    a.push(mean_log / r2);
                    abs.push(mean_abs_log / r2);
                    plus.push(log_plus / r2);
                    TrialResult::Surface { mean_log: *mean_log, mean_abs_log: *mean_abs_log, log_plus: *log_plus }
                }
                Err(reason) => TrialResult::Invalid { reason: reason.clone() },
            };
            records.push(TrialRecord { trial: t as u64, radius: r, result, seconds: *seconds });
        }
        let invalid = cfg.trials - a.len();
        check_invalid_cap(r, invalid, cfg.trials)?;
        let valid = a.len() as f64;
        let (mean_a, var_a) = mean_variance(&a);
        points.push(SurfacePoint {
            radius: r,
            trials: cfg.trials,
            invalid,
            mean_log_ratio: mean_a,
            std_log_ratio: var_a.sqrt(),
            mean_abs_log_ratio: mean_variance(&abs).0,
            mean_log_plus_ratio: mean_variance(&plus).0,
            abs_log_bound_violation_rate: abs.iter().filter(|&&x| x > bound).count() as f64 / valid,
            band_violation_rate: a.iter().filter(|&&x| x < ATHENA_BAND.0 || x > ATHENA_BAND.1).count() as f64 / valid,
        });
    }
    Ok(SurfaceReport { n: cfg.n, degree: basis.degree(), m, points, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_constant() {
        assert_eq!(abs_log_bound(1), 10.0);
        assert_eq!(abs_log_bound(2), 82.0);
    }

    #[test]
    fn moderate_radius_means() {
        let cfg = ExperimentConfig { radii: vec![3.0], trials: 100, seed: 30, ..Default::default() };
        let rep = run_surface_checks(&cfg).unwrap();
        let p = rep.points[0];
        // E log|ψ| = r²/2 - γ/2 at every point of the sphere.
        let expected = 0.5 - 0.5 * 0.5772156649 / 9.0;
        assert!((p.mean_log_ratio - expected).abs() < 4.0 * p.std_log_ratio / 10.0 + 1e-3, "{p:?}");
        assert!(p.mean_log_plus_ratio >= p.mean_log_ratio);
        assert!(p.mean_abs_log_ratio >= p.mean_log_ratio);
        assert_eq!(p.abs_log_bound_violation_rate, 0.0);
    }
}
