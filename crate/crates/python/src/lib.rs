//! Python bindings: sampling, evaluation, zero counting, hole tests and the
//! experiment drivers. Experiments release the GIL while they run.

use gafsim::coeff::Seed;
use gafsim::experiments::{
    fit_scaling_exponent, run_concentration, run_hole_curve, run_invariance_with, run_max_growth, run_surface_checks,
    ExperimentConfig, SummaryRow,
};
use gafsim::zeros::{counting_from_jensen, counting_from_winding, hole_test, HoleTestOptions};
use gafsim::{Complex64, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Capacity(_) | Error::Precondition(_) | Error::DegreeTooSmall { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// One draw of the truncated random series on `C^n`.
#[pyclass(name = "Sample", frozen)]
struct PySample {
    inner: gafsim::gaf::GafSample,
}

#[pymethods]
impl PySample {
    #[new]
    #[pyo3(signature = (n, degree, seed = 0))]
    fn new(n: usize, degree: usize, seed: u64) -> PyResult<Self> {
        let inner = gafsim::gaf::GafSample::sample(Seed::new(seed), n, degree).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Sample whose truncation error is below `eps` on the ball of radius `r`.
    #[staticmethod]
    #[pyo3(signature = (n, r, eps = 1e-9, seed = 0))]
    fn for_radius(n: usize, r: f64, eps: f64, seed: u64) -> PyResult<Self> {
        let degree = gafsim::gaf::choose_degree(n, r, eps).map_err(to_py)?;
        Self::new(n, degree, seed)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    /// Raw coefficients in graded lexicographic order.
    fn coefficients(&self) -> Vec<Complex64> {
        self.inner.coefficients().values().to_vec()
    }

    fn evaluate(&self, z: Vec<Complex64>) -> PyResult<Complex64> {
        self.check_dim(&z)?;
        Ok(self.inner.evaluate(&z))
    }

    fn log_abs(&self, z: Vec<Complex64>) -> PyResult<f64> {
        self.check_dim(&z)?;
        Ok(self.inner.log_abs(&z))
    }

    /// Number of zeros in the disk of radius `r` (one variable only).
    fn count_zeros(&self, r: f64) -> PyResult<f64> {
        Ok(counting_from_winding(&self.inner, r).map_err(to_py)?.raw_count)
    }

    /// Jensen-formula count and its error bar.
    #[pyo3(signature = (r, h = 0.05, m = None))]
    fn jensen_count(&self, r: f64, h: f64, m: Option<usize>) -> PyResult<(f64, f64)> {
        let m = m.unwrap_or_else(|| gafsim::zeros::jensen::default_resolution(self.inner.n()));
        let est = counting_from_jensen(&self.inner, r, h, m).map_err(to_py)?;
        Ok((est.raw_count, est.error_bar))
    }

    /// Whether the ball of radius `r` is free of zeros.
    #[pyo3(signature = (r, lines = 256))]
    fn is_hole(&self, r: f64, lines: usize) -> PyResult<bool> {
        Ok(hole_test(&self.inner, r, &HoleTestOptions::with_lines(lines)).map_err(to_py)?.is_hole())
    }

    fn __repr__(&self) -> String {
        format!("Sample(n={}, degree={})", self.inner.n(), self.inner.degree())
    }
}

impl PySample {
    fn check_dim(&self, z: &[Complex64]) -> PyResult<()> {
        if z.len() == self.inner.n() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("point has {} coordinates, expected {}", z.len(), self.inner.n())))
        }
    }
}

type Row = (f64, f64, f64, f64, usize);

fn rows(summary: Vec<SummaryRow>) -> Vec<Row> {
    summary.into_iter().map(|r| (r.radius, r.estimate, r.ci_lo, r.ci_hi, r.trials)).collect()
}

fn config(n: usize, radii: Vec<f64>, trials: usize, seed: u64, workers: usize) -> PyResult<ExperimentConfig> {
    let cfg = ExperimentConfig { n, radii, trials, seed, workers, ..Default::default() };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

#[pyfunction]
fn choose_degree(n: usize, r: f64, eps: f64) -> PyResult<usize> {
    gafsim::gaf::choose_degree(n, r, eps).map_err(to_py)
}

/// Hole probability per radius as `(radius, p, ci_lo, ci_hi, trials)` rows.
#[pyfunction]
#[pyo3(signature = (n, radii, trials, seed = 0, workers = 1))]
fn hole_curve(py: Python<'_>, n: usize, radii: Vec<f64>, trials: usize, seed: u64, workers: usize) -> PyResult<Vec<Row>> {
    let cfg = config(n, radii, trials, seed, workers)?;
    py.detach(|| run_hole_curve(&cfg).map(|c| rows(c.summary()))).map_err(to_py)
}

/// Mean zero count over `r²` per radius.
#[pyfunction]
#[pyo3(signature = (n, radii, trials, seed = 0, workers = 1))]
fn concentration(py: Python<'_>, n: usize, radii: Vec<f64>, trials: usize, seed: u64, workers: usize) -> PyResult<Vec<Row>> {
    let cfg = config(n, radii, trials, seed, workers)?;
    py.detach(|| run_concentration(&cfg).map(|c| rows(c.summary()))).map_err(to_py)
}

/// Mean of `log M_r/r²` per radius.
#[pyfunction]
#[pyo3(signature = (n, radii, trials, seed = 0, workers = 1))]
fn max_growth(py: Python<'_>, n: usize, radii: Vec<f64>, trials: usize, seed: u64, workers: usize) -> PyResult<Vec<Row>> {
    let cfg = config(n, radii, trials, seed, workers)?;
    py.detach(|| run_max_growth(&cfg).map(|c| rows(c.summary()))).map_err(to_py)
}

/// Mean spherical average of `log|ψ|` over `r²` per radius.
#[pyfunction]
#[pyo3(signature = (n, radii, trials, seed = 0, workers = 1))]
fn surface(py: Python<'_>, n: usize, radii: Vec<f64>, trials: usize, seed: u64, workers: usize) -> PyResult<Vec<Row>> {
    let cfg = config(n, radii, trials, seed, workers)?;
    py.detach(|| run_surface_checks(&cfg).map(|c| rows(c.summary()))).map_err(to_py)
}

/// Two-sample KS test of the shifted maximum at the origin against `center`.
/// Returns `(statistic, p_value, accept)`.
#[pyfunction]
#[pyo3(signature = (n, center, s, trials, seed = 0, workers = 1, corrupt = false))]
#[allow(clippy::too_many_arguments)]
fn invariance(
    py: Python<'_>,
    n: usize,
    center: Vec<Complex64>,
    s: f64,
    trials: usize,
    seed: u64,
    workers: usize,
    corrupt: bool,
) -> PyResult<(f64, f64, bool)> {
    let cfg = config(n, vec![s], trials, seed, workers)?;
    let rep = py.detach(|| run_invariance_with(&cfg, &center, s, corrupt)).map_err(to_py)?;
    Ok((rep.test.statistic, rep.test.p_value, rep.test.accept))
}

/// Slope and intercept of `log(-log p)` against `log r` over the gated rows.
#[pyfunction]
fn fit_exponent(rows: Vec<Row>) -> PyResult<(f64, f64)> {
    let rows: Vec<SummaryRow> = rows
        .into_iter()
        .map(|(radius, estimate, ci_lo, ci_hi, trials)| SummaryRow { radius, estimate, ci_lo, ci_hi, trials })
        .collect();
    let fit = fit_scaling_exponent(&rows).map_err(to_py)?;
    Ok((fit.slope, fit.intercept))
}

#[pymodule]
#[pyo3(name = "gafsim")]
fn gafsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(choose_degree, m)?)?;
    m.add_function(wrap_pyfunction!(hole_curve, m)?)?;
    m.add_function(wrap_pyfunction!(concentration, m)?)?;
    m.add_function(wrap_pyfunction!(max_growth, m)?)?;
    m.add_function(wrap_pyfunction!(surface, m)?)?;
    m.add_function(wrap_pyfunction!(invariance, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    Ok(())
}
