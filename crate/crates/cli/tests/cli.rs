use std::path::Path;
use std::process::{Command, Output};

use gafsim::gaf::choose_degree;
use gafsim_cli::output::{parse_summary_csv, summary_csv, verify_manifest, RunManifest, PLOT_HEADER};
use gafsim::experiments::SummaryRow;

fn gafsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gafsim")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sample_is_deterministic() {
    let a = gafsim(&["sample", "--n", "2", "--degree", "5", "--seed", "9", "--grid", "3"]);
    let b = gafsim(&["sample", "--n", "2", "--degree", "5", "--seed", "9", "--grid", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 21);
    assert_eq!(v["grid"].as_array().unwrap().len(), 9);
}

#[test]
fn sample_degree_from_radius() {
    let o = gafsim(&["sample", "--n", "1", "--radius", "1", "--eps", "1e-9"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degree"].as_u64().unwrap() as usize, choose_degree(1, 1.0, 1e-9).unwrap());
    assert!(v["tail_bound"]["bound"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(gafsim(&["sample", "--degree", "3"]).status.code(), Some(2));
    assert_eq!(gafsim(&["sample", "--n", "1", "--degree", "3", "--radius", "1"]).status.code(), Some(2));
    assert_eq!(gafsim(&["sample", "--n", "1"]).status.code(), Some(2));
    assert_eq!(gafsim(&["hole", "--config", "/nonexistent/gafsim.cfg"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "n = 1\nradii = -1\n");
    assert_eq!(gafsim(&["hole", "--config", &bad]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "unknown.cfg", "n = 1\nspeed = 3\n");
    assert_eq!(gafsim(&["count", "--config", &unknown]).status.code(), Some(2));
}

#[test]
fn hole_summary_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "hole.cfg", "n = 1\nradii = 0.5, 1.0\ntrials = 400\nseed = 5\n");
    let out1 = dir.path().join("w1");
    let out2 = dir.path().join("w2");
    let a = gafsim(&["hole", "--config", &cfg, "--workers", "1", "--out", out1.to_str().unwrap()]);
    let b = gafsim(&["hole", "--config", &cfg, "--workers", "2", "--out", out2.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let ca = std::fs::read(out1.join("hole_summary.csv")).unwrap();
    assert_eq!(ca, std::fs::read(out2.join("hole_summary.csv")).unwrap());
    assert_eq!(ca, a.stdout);

    let manifest: RunManifest =
        serde_json::from_slice(&std::fs::read(out1.join("hole_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.master_seed, 5);
    assert_eq!(manifest.outputs.len(), 3);
    verify_manifest(&out1, &manifest).unwrap();
    let lines = std::fs::read_to_string(out1.join("hole_records.jsonl")).unwrap();
    assert!(lines.lines().count() >= 400);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["trial", "radius", "result", "seconds"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn count_mean_matches_area() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "count.cfg", "n = 1\nradii = 3\ntrials = 400\nseed = 8\n");
    let out = dir.path().join("out");
    let o = gafsim(&["count", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_summary_csv(&stdout(&o)).unwrap();
    assert!((0.9..=1.1).contains(&rows[0].estimate), "{rows:?}");
}

#[test]
fn fit_recovers_planted_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<SummaryRow> = [0.8, 1.0, 1.1, 1.2, 1.3]
        .iter()
        .map(|&r: &f64| {
            let p = (-r.powi(4)).exp();
            SummaryRow { radius: r, estimate: p, ci_lo: 0.99 * p, ci_hi: 1.01 * p, trials: 100_000 }
        })
        .collect();
    let input = dir.path().join("synthetic.csv");
    std::fs::write(&input, summary_csv(&rows)).unwrap();
    let o = gafsim(&["fit", "--in", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let slope: f64 = text.lines().next().unwrap().trim_start_matches("slope = ").parse().unwrap();
    assert!((slope - 4.0).abs() < 1e-9, "{text}");

    let plot = std::fs::read_to_string(dir.path().join("synthetic_fit.csv")).unwrap();
    let mut lines = plot.lines();
    assert_eq!(lines.next(), Some(PLOT_HEADER));
    let pts: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect();
    assert_eq!(pts.len(), 5);
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (refit, _, _) = gafsim::experiments::stats::ols(&x, &y).unwrap();
    assert!((refit - slope).abs() < 1e-9);
}

#[test]
fn fit_with_too_few_points_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        SummaryRow { radius: 0.8, estimate: 0.4, ci_lo: 0.39, ci_hi: 0.41, trials: 1000 },
        SummaryRow { radius: 1.0, estimate: 0.2, ci_lo: 0.19, ci_hi: 0.21, trials: 1000 },
        SummaryRow { radius: 2.0, estimate: 0.0, ci_lo: 0.0, ci_hi: 0.003, trials: 1000 },
    ];
    let input = dir.path().join("thin.csv");
    std::fs::write(&input, summary_csv(&rows)).unwrap();
    assert_eq!(gafsim(&["fit", "--in", input.to_str().unwrap()]).status.code(), Some(3));
    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "a,b\n1,2\n").unwrap();
    assert_eq!(gafsim(&["fit", "--in", garbage.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn invariance_control_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inv.cfg",
        "n = 1\ntrials = 400\nseed = 3\ncenter = 1, 0.5\nsphere_radius = 1\nquadrature_m = 16\n",
    );
    let out = dir.path().join("out");
    let ok = gafsim(&["invariance", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("invariance_report.json")).unwrap()).unwrap();
    assert_eq!(report["test"]["accept"], serde_json::Value::Bool(true));

    let bad = gafsim(&["invariance", "--config", &cfg, "--corrupt", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("invariance_report.json")).unwrap()).unwrap();
    assert_eq!(report["test"]["accept"], serde_json::Value::Bool(false));
}
