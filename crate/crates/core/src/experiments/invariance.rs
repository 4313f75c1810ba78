//! Translation invariance of the shifted sphere maximum, tested by comparing
//! the distributions at the origin and at a translated center.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::growth::max_stat;
use super::stats::{ks_two_sample, KsResult};
use super::{labels, map_trials, ExperimentConfig, TrialRecord, TrialResult};
use crate::error::{Error, Result};
use crate::gaf::{norm_sqr, GafBasis};
use crate::geometry::{partition_sphere, SpherePartition};

/// Rejection level of the Kolmogorov–Smirnov decisions.
pub const KS_LEVEL: f64 = 0.01;

fn default_m(n: usize) -> usize {
    if n == 1 {
        32
    } else {
        4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub n: usize,
    pub degree: usize,
    pub center: Vec<Complex64>,
    pub sphere_radius: f64,
    pub m: usize,
    /// Group B used `log|ψ|` without the `-|z|²/2` shift.
    pub corrupted: bool,
    /// Origin versus translated center.
    pub test: KsResult,
    /// Origin versus origin with independent seeds; must accept.
    pub control: KsResult,
    pub records: Vec<TrialRecord>,
}

fn group(
    cfg: &ExperimentConfig,
    label: u64,
    name: &str,
    center: &[Complex64],
    part: &SpherePartition,
    basis: &std::sync::Arc<GafBasis>,
    shifted: bool,
) -> Result<(Vec<f64>, Vec<TrialRecord>)> {
    let rows = map_trials(cfg.trials, cfg.workers, |t| {
        let start = Instant::now();
        let sample = cfg.trial_sample(label, t, basis);
        let value = max_stat(&sample, center, part, shifted)?.value;
        Ok((value, start.elapsed().as_secs_f64()))
    })?;
    let records = rows
        .iter()
        .enumerate()
        .map(|(t, &(value, seconds))| TrialRecord {
            trial: t as u64,
            radius: part.radius(),
            result: TrialResult::Invariance { group: name.to_string(), value },
            seconds,
        })
        .collect();
    Ok((rows.into_iter().map(|(v, _)| v).collect(), records))
}

/// Two-sample KS comparison of the shifted max on `∂B(0, s)` and `∂B(ζ, s)`.
pub fn run_invariance(cfg: &ExperimentConfig, zeta: &[Complex64], s: f64) -> Result<InvarianceReport> {
    run_invariance_with(cfg, zeta, s, false)
}

/// [`run_invariance`], optionally dropping the shift on the translated group.
/// The unshifted variant is a negative control that the test must reject.
pub fn run_invariance_with(cfg: &ExperimentConfig, zeta: &[Complex64], s: f64, corrupt: bool) -> Result<InvarianceReport> {
    cfg.validate()?;
    if zeta.len() != cfg.n {
        return Err(Error::Config(format!("center has {} coordinates, expected {}", zeta.len(), cfg.n)));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Config(format!("sphere radius {s} must be positive")));
    }
    let basis = cfg.basis_for(norm_sqr(zeta).sqrt() + s)?;
    let m = cfg.quadrature_m.unwrap_or_else(|| default_m(cfg.n));
    let part = partition_sphere(2 * cfg.n, m, s)?;
    let origin = vec![Complex64::new(0.0, 0.0); cfg.n];

    let (a, mut records) = group(cfg, labels::INVARIANCE_A, "origin", &origin, &part, &basis, true)?;
    let (b, rec_b) = group(cfg, labels::INVARIANCE_B, "translated", zeta, &part, &basis, !corrupt)?;
    let (c, rec_c) = group(cfg, labels::INVARIANCE_CONTROL, "control", &origin, &part, &basis, true)?;
    records.extend(rec_b);
    records.extend(rec_c);
    Ok(InvarianceReport {
        n: cfg.n,
        degree: basis.degree(),
        center: zeta.to_vec(),
        sphere_radius: s,
        m,
        corrupted: corrupt,
        test: ks_two_sample(&a, &b, KS_LEVEL)?,
        control: ks_two_sample(&a, &c, KS_LEVEL)?,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shift_is_a_calibration_run() {
        let cfg = ExperimentConfig { trials: 300, seed: 12, ..Default::default() };
        let rep = run_invariance(&cfg, &[Complex64::new(0.0, 0.0)], 1.0).unwrap();
        assert!(rep.test.accept && rep.control.accept, "{rep:?}");
        assert_eq!(rep.records.len(), 900);
    }

    #[test]
    fn corruption_is_rejected() {
        let cfg = ExperimentConfig { trials: 300, seed: 13, ..Default::default() };
        let rep = run_invariance_with(&cfg, &[Complex64::new(2.0, 0.0)], 1.0, true).unwrap();
        assert!(!rep.test.accept);
        assert!(rep.control.accept);
    }

    #[test]
    fn center_dimension_is_checked() {
        let cfg = ExperimentConfig { trials: 3, ..Default::default() };
        assert!(run_invariance(&cfg, &[Complex64::new(0.0, 0.0); 2], 1.0).is_err());
    }
}
