//! Monte Carlo drivers: hole-probability curves and scaling fits, counting
//! concentration, maximum growth, translation invariance, and surface means.
//!
//! Every trial owns a seed derived from `(master, experiment label, trial)`
//! and draws one sample, truncated for the largest radius in the run, which is
//! reused at every radius. Trials run on a dedicated thread pool and come back
//! in trial order, and all reductions are sequential, so outputs do not depend
//! on the worker count.

pub mod concentration;
pub mod growth;
pub mod hole;
pub mod invariance;
pub mod stats;
pub mod surface;

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::Seed;
use crate::error::{Error, Result};
use crate::gaf::{choose_degree, GafBasis, GafSample};

pub use concentration::{run_concentration, ConcentrationPoint, ConcentrationReport};
pub use growth::{run_max_growth, GrowthPoint, GrowthReport, MaxStat};
pub use hole::{fit_scaling_exponent, run_hole_curve, FitResult, HoleCurve, HolePoint};
pub use invariance::{run_invariance, run_invariance_with, InvarianceReport};
pub use surface::{run_surface_checks, SurfacePoint, SurfaceReport};

/// Seed labels that keep the experiments' random streams apart.
pub mod labels {
    pub const HOLE: u64 = 1;
    pub const CONCENTRATION: u64 = 2;
    pub const GROWTH: u64 = 3;
    pub const INVARIANCE_A: u64 = 4;
    pub const INVARIANCE_B: u64 = 5;
    pub const INVARIANCE_CONTROL: u64 = 6;
    pub const SURFACE: u64 = 7;
}

/// Largest tolerated share of invalid trials per radius.
pub const INVALID_TRIAL_CAP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub radii: Vec<f64>,
    pub trials: usize,
    /// Master seed.
    pub seed: u64,
    /// Truncation tolerance handed to `choose_degree`.
    pub eps: f64,
    /// Lines per hole test for `n ≥ 2`.
    pub lines: usize,
    pub workers: usize,
    pub output: Option<PathBuf>,
    /// Cells per facet edge for sphere quadratures; `None` picks a per-experiment default.
    pub quadrature_m: Option<usize>,
    /// Log-radius half-step of the counting estimator.
    pub jensen_h: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 1,
            radii: vec![1.0],
            trials: 1000,
            seed: 0,
            eps: 1e-9,
            lines: crate::zeros::hole::DEFAULT_LINES,
            workers: 1,
            output: None,
            quadrature_m: None,
            jensen_h: crate::zeros::jensen::DEFAULT_H,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.radii.is_empty() {
            return bad("radii must not be empty".into());
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad(format!("radii must be positive and finite: {:?}", self.radii));
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("radii must be strictly increasing: {:?}", self.radii));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps = {} outside (0, 1)", self.eps));
        }
        if self.lines == 0 {
            return bad("lines must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.quadrature_m == Some(0) {
            return bad("quadrature_m must be at least 1".into());
        }
        if !(self.jensen_h > 0.0 && self.jensen_h <= 0.2) {
            return bad(format!("jensen_h = {} outside (0, 0.2]", self.jensen_h));
        }
        Ok(())
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// Shared basis truncated for validity up to `radius`.
    pub(crate) fn basis_for(&self, radius: f64) -> Result<Arc<GafBasis>> {
        GafBasis::new(self.n, choose_degree(self.n, radius, self.eps)?)
    }

    pub(crate) fn trial_sample(&self, label: u64, trial: usize, basis: &Arc<GafBasis>) -> GafSample {
        GafSample::draw(Seed::with_labels(self.seed, label, trial as u64), basis)
    }
}

/// One line of per-trial output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub radius: f64,
    pub result: TrialResult,
    /// Wall time spent on this trial at this radius.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialResult {
    /// `inferred` marks verdicts implied by a zero already found at a smaller radius.
    Hole { hole: bool, lines_tested: usize, inferred: bool },
    Count { raw_count: f64, paper_n: f64, error_bar: f64 },
    MaxGrowth { log_max: f64, ratio: f64 },
    Surface { mean_log: f64, mean_abs_log: f64, log_plus: f64 },
    Invariance { group: String, value: f64 },
    Invalid { reason: String },
}

/// Errors that invalidate a single trial instead of the whole run.
pub(crate) fn is_trial_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::ZeroNearContour { .. } | Error::RetriesExhausted { .. } | Error::SingularNode | Error::RootFinding(_)
    )
}

/// `f(0), …, f(trials - 1)` on a pool of `workers` threads, in trial order.
pub(crate) fn map_trials<T, F>(trials: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| (0..trials).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// Fails the run when a radius has more invalid trials than the cap allows.
pub(crate) fn check_invalid_cap(radius: f64, invalid: usize, trials: usize) -> Result<()> {
    if invalid as f64 > INVALID_TRIAL_CAP * trials as f64 {
        return Err(Error::InvalidTrialCap { radius, invalid, trials });
    }
    Ok(())
}

/// One row of a summary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub radius: f64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
}
