//! Hole-probability curves and the fit of their decay exponent.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stats::{clopper_pearson, ols};
use super::{check_invalid_cap, is_trial_failure, labels, map_trials, ExperimentConfig, SummaryRow, TrialRecord, TrialResult};
use crate::error::{Error, Result};
use crate::zeros::hole::{hole_test, HoleTestOptions};

/// Confidence level of the per-radius intervals.
pub const CONFIDENCE: f64 = 0.95;
/// Gated points required by the exponent fit.
pub const MIN_GATED_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolePoint {
    pub radius: f64,
    pub trials: usize,
    pub holes: usize,
    pub invalid: usize,
    /// Holes over valid trials.
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleCurve {
    pub n: usize,
    pub degree: usize,
    pub lines: usize,
    pub points: Vec<HolePoint>,
    pub records: Vec<TrialRecord>,
}

impl HoleCurve {
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.points
            .iter()
            .map(|p| SummaryRow { radius: p.radius, estimate: p.estimate, ci_lo: p.ci_lo, ci_hi: p.ci_hi, trials: p.trials })
            .collect()
    }
}

enum Outcome {
    Tested { hole: bool, lines: usize, seconds: f64 },
    Inferred,
    Invalid { reason: String, seconds: f64 },
}

/// Runs the hole test for every trial and radius.
///
/// One sample per trial serves all radii. Radii are visited in increasing
/// order; once a zero is found, every larger ball contains it too, so the
/// remaining radii are recorded as inferred non-holes without retesting.
pub fn run_hole_curve(cfg: &ExperimentConfig) -> Result<HoleCurve> {
    cfg.validate()?;
    let basis = cfg.basis_for(cfg.max_radius())?;
    let opts = HoleTestOptions { lines: cfg.lines, ..HoleTestOptions::default() };
    let outcomes = map_trials(cfg.trials, cfg.workers, |t| {
        let sample = cfg.trial_sample(labels::HOLE, t, &basis);
        let mut found = false;
        let mut row = Vec::with_capacity(cfg.radii.len());
        for &r in &cfg.radii {
            if found {
                row.push(Outcome::Inferred);
                continue;
            }
            let start = Instant::now();
            match hole_test(&sample, r, &opts) {
                Ok(v) => {
                    found = !v.is_hole();
                    row.push(Outcome::Tested { hole: v.is_hole(), lines: v.lines_tested, seconds: start.elapsed().as_secs_f64() });
                }
                Err(e) if is_trial_failure(&e) => {
                    row.push(Outcome::Invalid { reason: e.to_string(), seconds: start.elapsed().as_secs_f64() })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(row)
    })?;

    let mut points = Vec::with_capacity(cfg.radii.len());
    let mut records = Vec::with_capacity(cfg.trials * cfg.radii.len());
    for (i, &r) in cfg.radii.iter().enumerate() {
        let (mut holes, mut invalid) = (0usize, 0usize);
        for (t, row) in outcomes.iter().enumerate() {
            let (result, seconds) = match &row[i] {
                Outcome::Tested { hole, lines, seconds } => {
                    holes += usize::from(*hole);
                    (TrialResult::Hole { hole: *hole, lines_tested: *lines, inferred: false }, *seconds)
                }
                Outcome::Inferred => (TrialResult::Hole { hole: false, lines_tested: 0, inferred: true }, 0.0),
                Outcome::Invalid { reason, seconds } => {
                    invalid += 1;
                    (TrialResult::Invalid { reason: reason.clone() }, *seconds)
                }
            };
            records.push(TrialRecord { trial: t as u64, radius: r, result, seconds });
        }
        check_invalid_cap(r, invalid, cfg.trials)?;
        let valid = cfg.trials - invalid;
        let (ci_lo, ci_hi) = clopper_pearson(holes as u64, valid as u64, CONFIDENCE)?;
        points.push(HolePoint {
            radius: r,
            trials: cfg.trials,
            holes,
            invalid,
            estimate: holes as f64 / valid as f64,
            ci_lo,
            ci_hi,
        });
    }
    Ok(HoleCurve { n: cfg.n, degree: basis.degree(), lines: cfg.lines, points, records })
}

/// Quality-gate decision for one summary row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateEntry {
    pub radius: f64,
    pub estimate: f64,
    pub ci_width: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub radii: Vec<f64>,
    pub gate: Vec<GateEntry>,
}

/// The gate: `0 < p̂ < 1` and an interval narrower than `p̂` itself.
pub fn quality_gate(rows: &[SummaryRow]) -> Vec<GateEntry> {
    rows.iter()
        .map(|row| {
            let ci_width = row.ci_hi - row.ci_lo;
            let passed = row.estimate > 0.0 && row.estimate < 1.0 && ci_width < row.estimate && row.radius > 0.0;
            GateEntry { radius: row.radius, estimate: row.estimate, ci_width, passed }
        })
        .collect()
}

/// Unweighted least squares of `log(-log p̂)` against `log r` over gated rows.
pub fn fit_scaling_exponent(rows: &[SummaryRow]) -> Result<FitResult> {
    let gate = quality_gate(rows);
    let used: Vec<&GateEntry> = gate.iter().filter(|g| g.passed).collect();
    if used.len() < MIN_GATED_POINTS {
        let report = gate
            .iter()
            .map(|g| format!("r={} p={} width={} {}", g.radius, g.estimate, g.ci_width, if g.passed { "pass" } else { "fail" }))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::InsufficientGatedPoints { gated: used.len(), required: MIN_GATED_POINTS, report });
    }
    let x: Vec<f64> = used.iter().map(|g| g.radius.ln()).collect();
    let y: Vec<f64> = used.iter().map(|g| (-g.estimate.ln()).ln()).collect();
    let (slope, intercept, residuals) = ols(&x, &y)?;
    Ok(FitResult { slope, intercept, residuals, radii: used.iter().map(|g| g.radius).collect(), gate })
}
