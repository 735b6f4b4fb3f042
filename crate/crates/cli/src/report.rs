//! Writing an [`Outcome`] to an output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{CliError, Outcome};

pub const REPORT: &str = "report.txt";
pub const TIMINGS: &str = "timings.txt";
pub const MANIFEST: &str = "manifest.txt";

/// `key=value` lines in insertion order.
pub fn report_text(o: &Outcome) -> String {
    let mut s = String::new();
    for (k, v) in &o.metrics {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

/// Reads `key=value` lines back.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Writes every file of `o` plus the report, timings and a manifest listing
/// them all. Wall-clock times stay out of the report so reruns compare equal.
pub fn write_outputs(dir: &Path, o: &Outcome) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let mut timings = String::new();
    for (k, v) in &o.timings {
        let _ = writeln!(timings, "{k}={v:.6}");
    }
    let mut all: Vec<(&str, &str)> = o.files.iter().map(|(n, c)| (n.as_str(), c.as_str())).collect();
    let report = report_text(o);
    all.push((REPORT, &report));
    all.push((TIMINGS, &timings));
    let mut manifest = String::new();
    let mut written = Vec::new();
    for (name, contents) in all {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(path.clone(), e))?;
        let _ = writeln!(manifest, "{name}");
        written.push(path);
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| CliError::Io(path.clone(), e))?;
    written.push(path);
    Ok(written)
}
