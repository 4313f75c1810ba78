//! Flat `key = value` run configuration.
//!
//! Keys mirror the experiment configuration fields. Lists are comma
//! separated, `#` starts a comment, and blank lines are ignored:
//!
//! ```text
//! n = 1
//! radii = 0.8, 1.0, 1.2
//! trials = 1000
//! seed = 42
//! ```

use std::path::{Path, PathBuf};

use gafsim::experiments::ExperimentConfig;
use gafsim::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    /// Translation center for the invariance run, as `2n` reals.
    pub center: Option<Vec<f64>>,
    pub sphere_radius: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { experiment: ExperimentConfig::default(), center: None, sphere_radius: None }
    }
}

impl RunConfig {
    /// `center` as a point of `C^n`; the origin when unset.
    pub fn center_point(&self) -> Result<Vec<Complex64>, String> {
        let n = self.experiment.n;
        match &self.center {
            None => Ok(vec![Complex64::new(0.0, 0.0); n]),
            Some(v) if v.len() == 2 * n => Ok(v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()),
            Some(v) => Err(format!("center has {} reals, expected 2n = {}", v.len(), 2 * n)),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value.split(',').map(|item| parse_num(key, item)).collect()
}

/// Parses configuration text; unknown or repeated keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(format!("line {}: key {key} given twice", lineno + 1));
        }
        let e = &mut cfg.experiment;
        match key {
            "n" => e.n = parse_num(key, value)?,
            "radii" => e.radii = parse_list(key, value)?,
            "trials" => e.trials = parse_num(key, value)?,
            "seed" => e.seed = parse_num(key, value)?,
            "eps" => e.eps = parse_num(key, value)?,
            "lines" => e.lines = parse_num(key, value)?,
            "workers" => e.workers = parse_num(key, value)?,
            "output" => e.output = Some(PathBuf::from(value)),
            "quadrature_m" => e.quadrature_m = Some(parse_num(key, value)?),
            "jensen_h" => e.jensen_h = parse_num(key, value)?,
            "center" => cfg.center = Some(parse_list(key, value)?),
            "sphere_radius" => cfg.sphere_radius = Some(parse_num(key, value)?),
            other => return Err(format!("line {}: unknown key {other}", lineno + 1)),
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let text = "# hole run\nn = 2\nradii = 0.6, 0.8,1.0\ntrials=500\nseed = 42 # master\neps = 1e-8\n\
                    lines = 64\nworkers = 4\noutput = out/dir\nquadrature_m = 6\njensen_h = 0.1\n\
                    center = 1, 0, 0, 0.5\nsphere_radius = 1.5\n";
        let cfg = parse_config(text).unwrap();
        let e = &cfg.experiment;
        assert_eq!((e.n, e.trials, e.seed, e.lines, e.workers), (2, 500, 42, 64, 4));
        assert_eq!(e.radii, vec![0.6, 0.8, 1.0]);
        assert_eq!(e.eps, 1e-8);
        assert_eq!(e.output, Some(PathBuf::from("out/dir")));
        assert_eq!(e.quadrature_m, Some(6));
        assert_eq!(e.jensen_h, 0.1);
        assert_eq!(cfg.sphere_radius, Some(1.5));
        assert_eq!(cfg.center_point().unwrap(), vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)]);
    }

    #[test]
    fn defaults_and_errors() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.experiment, ExperimentConfig::default());
        assert!(parse_config("n 1").is_err());
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("n = one").is_err());
        assert!(parse_config("n = 1\nn = 2").is_err());
        assert!(parse_config("radii = 1, x").is_err());
        let cfg = parse_config("n = 1\ncenter = 1, 2, 3").unwrap();
        assert!(cfg.center_point().is_err());
    }
}
