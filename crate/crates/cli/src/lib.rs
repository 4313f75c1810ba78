//! Command-line front end for the gafsim experiments.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on usage or configuration
//! errors, 3 on statistical-quality failures (invalid-trial cap breached, too
//! few gated points for a fit, or a failed calibration control).

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gafsim::coeff::Seed;
use gafsim::experiments::hole::quality_gate;
use gafsim::experiments::{
    fit_scaling_exponent, run_concentration, run_hole_curve, run_invariance_with, run_max_growth, run_surface_checks,
    SummaryRow, TrialRecord,
};
use gafsim::gaf::{choose_degree, tail_bound, GafSample};
use gafsim::{Complex64, Error};
use serde::Serialize;

use config::{load_config, RunConfig};
use output::{now_unix, records_jsonl, summary_csv, InvalidTally, OutputSet, RunManifest, PLOT_HEADER};

pub const DEFAULT_OUTPUT_DIR: &str = "gafsim-out";

#[derive(Debug, Parser)]
#[command(name = "gafsim", version, about = "Monte Carlo experiments on Gaussian analytic functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump one sample's coefficients and, optionally, values on a grid.
    Sample(SampleArgs),
    /// Hole-probability curve.
    Hole(RunArgs),
    /// Zero-count concentration.
    Count(RunArgs),
    /// Growth of the maximum modulus.
    Maxgrowth(RunArgs),
    /// Translation invariance of the shifted maximum.
    Invariance(InvarianceArgs),
    /// Spherical means of log|ψ|.
    Surface(RunArgs),
    /// Fit the decay exponent of a hole-probability summary.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    /// Truncation degree; mutually exclusive with --radius/--eps.
    #[arg(long, conflicts_with_all = ["radius", "eps"], required_unless_present = "radius")]
    pub degree: Option<usize>,
    /// Choose the degree so the truncation is valid up to this radius.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, requires = "radius")]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate on a K×K lattice of the first coordinate plane.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Half-width of the evaluation lattice.
    #[arg(long, default_value_t = 1.0)]
    pub grid_radius: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvarianceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Drop the -|z|²/2 shift on the translated group (negative control).
    #[arg(long)]
    pub corrupt: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Summary CSV written by `hole`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Plot-data file; defaults to `<input stem>_fit.csv` next to the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    Runtime(String),
    Usage(String),
    Quality(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Quality(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Runtime(m) | Failure::Usage(m) | Failure::Quality(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o error: {e}"))
    }
}

fn from_core(e: Error) -> Failure {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Capacity(_) | Error::Precondition(_) | Error::DegreeTooSmall { .. } => {
            Failure::Usage(e.to_string())
        }
        Error::InvalidTrialCap { .. } | Error::InsufficientGatedPoints { .. } => Failure::Quality(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Sample(a) => cmd_sample(&a),
        Command::Hole(a) => cmd_experiment("hole", &a, false),
        Command::Count(a) => cmd_experiment("count", &a, false),
        Command::Maxgrowth(a) => cmd_experiment("maxgrowth", &a, false),
        Command::Surface(a) => cmd_experiment("surface", &a, false),
        Command::Invariance(a) => cmd_experiment("invariance", &a.run, a.corrupt),
        Command::Fit(a) => cmd_fit(&a),
    }
}

#[derive(Serialize)]
struct CoefficientEntry {
    index: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct GridEntry {
    z: Vec<[f64; 2]>,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct SampleDump {
    n: usize,
    degree: usize,
    seed: Seed,
    tail_bound: Option<gafsim::gaf::TailBound>,
    coefficients: Vec<CoefficientEntry>,
    grid: Option<Vec<GridEntry>>,
}

fn cmd_sample(a: &SampleArgs) -> Result<(), Failure> {
    let (degree, bound) = match (a.degree, a.radius) {
        (Some(d), None) => (d, None),
        (None, Some(r)) => {
            let d = choose_degree(a.n, r, a.eps.unwrap_or(1e-9)).map_err(from_core)?;
            (d, Some(tail_bound(a.n, d, r).map_err(from_core)?))
        }
        _ => return Err(Failure::Usage("give exactly one of --degree or --radius".into())),
    };
    let seed = Seed::new(a.seed);
    let sample = GafSample::sample(seed, a.n, degree).map_err(from_core)?;
    let coefficients = sample
        .coefficients()
        .iter()
        .map(|(j, c)| CoefficientEntry { index: j.entries().to_vec(), re: c.re, im: c.im })
        .collect();
    let grid = a.grid.map(|k| {
        let step = if k > 1 { 2.0 * a.grid_radius / (k - 1) as f64 } else { 0.0 };
        let coord = |i: usize| if k > 1 { -a.grid_radius + step * i as f64 } else { 0.0 };
        let mut entries = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let mut z = vec![Complex64::new(0.0, 0.0); a.n];
                z[0] = Complex64::new(coord(i), coord(j));
                let v = sample.evaluate(&z);
                entries.push(GridEntry { z: z.iter().map(|c| [c.re, c.im]).collect(), re: v.re, im: v.im });
            }
        }
        entries
    });
    let dump = SampleDump { n: a.n, degree, seed, tail_bound: bound, coefficients, grid };
    let mut text = serde_json::to_string_pretty(&dump).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    match &a.out {
        Some(path) => output::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn resolve_config(a: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = load_config(&a.config).map_err(Failure::Usage)?;
    let e = &mut cfg.experiment;
    if let Some(t) = a.trials {
        e.trials = t;
    }
    if let Some(s) = a.seed {
        e.seed = s;
    }
    if let Some(w) = a.workers {
        e.workers = w;
    }
    if let Some(o) = &a.out {
        e.output = Some(o.clone());
    }
    e.validate().map_err(from_core)?;
    Ok(cfg)
}

/// Everything an experiment hands back to the persistence layer.
struct Outcome {
    summary: Vec<SummaryRow>,
    records: Vec<TrialRecord>,
    report: serde_json::Value,
    invalid: Vec<InvalidTally>,
    /// Set when a calibration control failed.
    quality_failure: Option<String>,
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Runtime(e.to_string()))
}

fn run_named(name: &str, cfg: &RunConfig, corrupt: bool) -> Result<Outcome, Error> {
    let e = &cfg.experiment;
    let json = |v: serde_json::Result<serde_json::Value>| v.map_err(|err| Error::Config(err.to_string()));
    Ok(match name {
        "hole" => {
            let mut curve = run_hole_curve(e)?;
            let records = std::mem::take(&mut curve.records);
            let invalid = curve.points.iter().map(|p| InvalidTally { radius: p.radius, invalid: p.invalid }).collect();
            Outcome { summary: curve.summary(), records, report: json(serde_json::to_value(&curve))?, invalid, quality_failure: None }
        }
        "count" => {
            let mut rep = run_concentration(e)?;
            let records = std::mem::take(&mut rep.records);
            let invalid = rep.points.iter().map(|p| InvalidTally { radius: p.radius, invalid: p.invalid }).collect();
            Outcome { summary: rep.summary(), records, report: json(serde_json::to_value(&rep))?, invalid, quality_failure: None }
        }
        "maxgrowth" => {
            let mut rep = run_max_growth(e)?;
            let records = std::mem::take(&mut rep.records);
            let invalid = rep.points.iter().map(|p| InvalidTally { radius: p.radius, invalid: 0 }).collect();
            Outcome { summary: rep.summary(), records, report: json(serde_json::to_value(&rep))?, invalid, quality_failure: None }
        }
        "surface" => {
            let mut rep = run_surface_checks(e)?;
            let records = std::mem::take(&mut rep.records);
            let invalid = rep.points.iter().map(|p| InvalidTally { radius: p.radius, invalid: p.invalid }).collect();
            Outcome { summary: rep.summary(), records, report: json(serde_json::to_value(&rep))?, invalid, quality_failure: None }
        }
        "invariance" => {
            let center = cfg.center_point().map_err(Error::Config)?;
            let s = cfg.sphere_radius.unwrap_or(1.0);
            let mut rep = run_invariance_with(e, &center, s, corrupt)?;
            let records = std::mem::take(&mut rep.records);
            // Row layout: the KS statistic as the estimate, [0, critical value] as the acceptance band.
            let critical = ks_critical(e.trials, e.trials, rep.test.level);
            let summary =
                vec![SummaryRow { radius: s, estimate: rep.test.statistic, ci_lo: 0.0, ci_hi: critical, trials: e.trials }];
            let quality_failure =
                (!rep.control.accept).then(|| format!("calibration control rejected (p = {})", rep.control.p_value));
            Outcome { summary, records, report: json(serde_json::to_value(&rep))?, invalid: vec![], quality_failure }
        }
        other => unreachable!("unknown experiment {other}"),
    })
}

/// Smallest KS statistic rejected at `level` for sample sizes `n1`, `n2`.
pub fn ks_critical(n1: usize, n2: usize, level: f64) -> f64 {
    let en = ((n1 * n2) as f64 / (n1 + n2) as f64).sqrt();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gafsim::experiments::stats::kolmogorov_q((en + 0.12 + 0.11 / en) * mid) >= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.experiment.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn config_echo(cfg: &RunConfig) -> Result<serde_json::Value, Failure> {
    let mut v = to_json(&cfg.experiment)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("center".into(), to_json(&cfg.center)?);
        map.insert("sphere_radius".into(), to_json(&cfg.sphere_radius)?);
    }
    Ok(v)
}

fn cmd_experiment(name: &str, a: &RunArgs, corrupt: bool) -> Result<(), Failure> {
    let cfg = resolve_config(a)?;
    let started = now_unix();
    let mut files = OutputSet::new(output_dir(&cfg));
    let outcome = match run_named(name, &cfg, corrupt) {
        Ok(o) => o,
        Err(e @ Error::InvalidTrialCap { .. }) => {
            let diag = serde_json::json!({ "command": name, "error": e.to_string(), "config": config_echo(&cfg)? });
            let path = files.write(&format!("{name}_diagnostics.json"), format!("{diag:#}\n").as_bytes())?;
            return Err(Failure::Quality(format!("{e}; diagnostics in {}", path.display())));
        }
        Err(e) => return Err(from_core(e)),
    };

    let csv = summary_csv(&outcome.summary);
    files.write(&format!("{name}_summary.csv"), csv.as_bytes())?;
    files.write(&format!("{name}_records.jsonl"), records_jsonl(&outcome.records).as_bytes())?;
    files.write(&format!("{name}_report.json"), format!("{:#}\n", outcome.report).as_bytes())?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: name.to_string(),
        config: config_echo(&cfg)?,
        master_seed: cfg.experiment.seed,
        started,
        finished: now_unix(),
        outputs: files.files().to_vec(),
        invalid_trials: outcome.invalid,
    };
    let manifest_text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))? + "\n";
    output::write_atomic(&files.dir().join(format!("{name}_manifest.json")), manifest_text.as_bytes())?;

    print!("{csv}");
    match outcome.quality_failure {
        Some(msg) => Err(Failure::Quality(msg)),
        None => Ok(()),
    }
}

fn default_plot_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "summary".into());
    input.with_file_name(format!("{stem}_fit.csv"))
}

fn cmd_fit(a: &FitArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", a.input.display())))?;
    let rows = output::parse_summary_csv(&text).map_err(Failure::Usage)?;
    let fit = match fit_scaling_exponent(&rows) {
        Ok(f) => f,
        Err(e) => return Err(from_core(e)),
    };
    let mut plot = String::from(PLOT_HEADER);
    plot.push_str("\r\n");
    for (g, row) in quality_gate(&rows).iter().zip(&rows) {
        if g.passed {
            let x = row.radius.ln();
            let y = (-row.estimate.ln()).ln();
            plot.push_str(&format!("{},{},{}\r\n", x, y, fit.intercept + fit.slope * x));
        }
    }
    let plot_path = a.out.clone().unwrap_or_else(|| default_plot_path(&a.input));
    output::write_atomic(&plot_path, plot.as_bytes())?;
    println!("slope = {}", fit.slope);
    println!("intercept = {}", fit.intercept);
    for (r, e) in fit.radii.iter().zip(&fit.residuals) {
        println!("residual r={r} {e}");
    }
    println!("plot data: {}", plot_path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_critical_value() {
        // 1.6276/sqrt(1000) plus the small-sample correction.
        let d = ks_critical(2000, 2000, 0.01);
        assert!((d - 0.0513).abs() < 5e-4, "{d}");
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
