//! Concentration of the zero count around its mean.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stats::mean_variance;
use super::{check_invalid_cap, is_trial_failure, labels, map_trials, ExperimentConfig, SummaryRow, TrialRecord, TrialResult};
use crate::error::Result;
use crate::zeros::jensen::{counting_from_jensen, default_resolution};
use crate::zeros::{counting_from_winding, CountingEstimate, Method};

/// Deviation levels `δ` of the reported tails `P(|n(r) - r²/2| ≥ δr²)`.
pub const DELTAS: [f64; 2] = [0.1, 0.2];
/// Histogram of `ν/r²`: bins of this width starting at 0, the last one open.
pub const HISTOGRAM_BIN: f64 = 0.1;
pub const HISTOGRAM_BINS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub radius: f64,
    pub trials: usize,
    pub invalid: usize,
    /// Mean and variance of `ν/r²`.
    pub mean_ratio: f64,
    pub var_ratio: f64,
    /// Mean of `paper_n/r²`, half of `mean_ratio`.
    pub mean_paper_ratio: f64,
    /// Empirical tail rate for each entry of [`DELTAS`].
    pub tails: Vec<f64>,
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub degree: usize,
    pub method: Method,
    pub points: Vec<ConcentrationPoint>,
    /// Whether every tail rate is non-increasing in the radius.
    pub tails_monotone: bool,
    pub records: Vec<TrialRecord>,
}

impl ConcentrationReport {
    /// Mean of `ν/r²` per radius with a normal 95% interval.
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.points
            .iter()
            .map(|p| {
                let valid = p.trials - p.invalid;
                let half = 1.96 * (p.var_ratio / valid as f64).sqrt();
                SummaryRow { radius: p.radius, estimate: p.mean_ratio, ci_lo: p.mean_ratio - half, ci_hi: p.mean_ratio + half, trials: p.trials }
            })
            .collect()
    }
}

/// Zero counts per trial and radius: exact winding counts for `n = 1`, the
/// spherical-mean estimator otherwise.
pub fn run_concentration(cfg: &ExperimentConfig) -> Result<ConcentrationReport> {
    cfg.validate()?;
    let method = if cfg.n == 1 { Method::Winding } else { Method::Jensen };
    let reach = match method {
        Method::Winding => cfg.max_radius(),
        _ => cfg.max_radius() * cfg.jensen_h.exp(),
    };
    let basis = cfg.basis_for(reach)?;
    let m = cfg.quadrature_m.unwrap_or_else(|| default_resolution(cfg.n));
    let rows = map_trials(cfg.trials, cfg.workers, |t| {
        let sample = cfg.trial_sample(labels::CONCENTRATION, t, &basis);
        cfg.radii
            .iter()
            .map(|&r| {
                let start = Instant::now();
                let est = match method {
                    Method::Winding => counting_from_winding(&sample, r),
                    _ => counting_from_jensen(&sample, r, cfg.jensen_h, m),
                };
                let seconds = start.elapsed().as_secs_f64();
                match est {
                    Ok(e) => Ok((Ok(e), seconds)),
                    Err(e) if is_trial_failure(&e) => Ok((Err(e.to_string()), seconds)),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<(std::result::Result<CountingEstimate, String>, f64)>>>()
    })?;

    let mut points = Vec::with_capacity(cfg.radii.len());
    let mut records = Vec::with_capacity(cfg.trials * cfg.radii.len());
    for (i, &r) in cfg.radii.iter().enumerate() {
        let r2 = r * r;
        let mut ratios = Vec::with_capacity(cfg.trials);
        let mut exceed = [0usize; DELTAS.len()];
        let mut histogram = vec![0usize; HISTOGRAM_BINS];
        for (t, row) in rows.iter().enumerate() {
            let (est, seconds) = &row[i];
            let result = match est {
                Ok(e) => {
                    let ratio = e.raw_count / r2;
                    ratios.push(ratio);
                    for (k, delta) in DELTAS.iter().enumerate() {
                        exceed[k] += usize::from((e.paper_n - 0.5 * r2).abs() >= delta * r2);
                    }
                    histogram[((ratio / HISTOGRAM_BIN) as usize).min(HISTOGRAM_BINS - 1)] += 1;
                    TrialResult::Count { raw_count: e.raw_count, paper_n: e.paper_n, error_bar: e.error_bar }
                }
                Err(reason) => TrialResult::Invalid { reason: reason.clone() },
            };
            records.push(TrialRecord { trial: t as u64, radius: r, result, seconds: *seconds });
        }
        let invalid = cfg.trials - ratios.len();
        check_invalid_cap(r, invalid, cfg.trials)?;
        let (mean_ratio, var_ratio) = mean_variance(&ratios);
        let valid = ratios.len() as f64;
        points.push(ConcentrationPoint {
            radius: r,
            trials: cfg.trials,
            invalid,
            mean_ratio,
            var_ratio,
            mean_paper_ratio: mean_ratio / 2.0,
            tails: exceed.iter().map(|&k| k as f64 / valid).collect(),
            histogram,
        });
    }
    let tails_monotone = (0..DELTAS.len()).all(|k| points.windows(2).all(|w| w[1].tails[k] <= w[0].tails[k]));
    Ok(ConcentrationReport { n: cfg.n, degree: basis.degree(), method, points, tails_monotone, records })
}
