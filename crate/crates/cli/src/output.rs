//! Persistence: CSV summaries, JSON Lines trial records, and the run manifest.
//! Every file is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use gafsim::experiments::{SummaryRow, TrialRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SUMMARY_HEADER: &str = "radius,estimate,ci_lo,ci_hi,trials";
pub const PLOT_HEADER: &str = "log_r,log_neg_log_p,fit";

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// RFC 4180 field: quoted when it contains a comma, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push_str("\r\n");
    for r in rows {
        let fields = [r.radius.to_string(), r.estimate.to_string(), r.ci_lo.to_string(), r.ci_hi.to_string(), r.trials.to_string()];
        out.push_str(&fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push_str("\r\n");
    }
    out
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Reads a summary table written by [`summary_csv`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>, String> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h == SUMMARY_HEADER => {}
        Some(h) => return Err(format!("unexpected header {h:?}, expected {SUMMARY_HEADER:?}")),
        None => return Err("empty summary file".into()),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f = split_csv_line(line);
            if f.len() != 5 {
                return Err(format!("row {}: expected 5 fields, found {}", i + 1, f.len()));
            }
            let num = |k: usize| f[k].trim().parse::<f64>().map_err(|_| format!("row {}: bad number {:?}", i + 1, f[k]));
            Ok(SummaryRow {
                radius: num(0)?,
                estimate: num(1)?,
                ci_lo: num(2)?,
                ci_hi: num(3)?,
                trials: f[4].trim().parse().map_err(|_| format!("row {}: bad trial count {:?}", i + 1, f[4]))?,
            })
        })
        .collect()
}

/// One JSON object per line with the fields `trial`, `radius`, `result`, `seconds`.
pub fn records_jsonl(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 96);
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trial records serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidTally {
    pub radius: f64,
    pub invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<OutputFile>,
    pub invalid_trials: Vec<InvalidTally>,
}

pub fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Collects output files with their checksums as they are written.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), files: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.push(OutputFile { path: PathBuf::from(name), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(path)
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }
}

/// Checks that every file named by a manifest exists and matches its checksum.
pub fn verify_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), String> {
    for f in &manifest.outputs {
        let bytes = fs::read(dir.join(&f.path)).map_err(|e| format!("{}: {e}", f.path.display()))?;
        if sha256_hex(&bytes) != f.sha256 {
            return Err(format!("{}: checksum mismatch", f.path.display()));
        }
    }
    Ok(())
}
