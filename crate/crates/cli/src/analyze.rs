//! `adasd analyze`: per-class entropy and JS means plus a JS histogram over
//! one or more persisted traces.

use std::fs;
use std::path::{Path, PathBuf};

use adasd::metrics::{SeparationReport, HISTOGRAM_BINS, HISTOGRAM_BIN_WIDTH};
use adasd::{separation_report, DecodeTrace};
use anyhow::{bail, Context, Result};

use crate::run::read_text;

/// Expands directories to the `.json` files they contain, sorted by path.
pub fn collect_trace_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|p| p.extension().is_some_and(|e| e == "json"));
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        bail!("no trace files found");
    }
    Ok(files)
}

pub fn load_trace(path: &Path) -> Result<DecodeTrace> {
    DecodeTrace::from_json(&read_text(path)?).with_context(|| format!("parsing trace {}", path.display()))
}

/// Writes `separation.json` and `js_histogram.csv` into `out` and returns the report.
pub fn cmd_analyze(inputs: &[PathBuf], out: &Path) -> Result<SeparationReport> {
    let traces: Vec<DecodeTrace> = collect_trace_files(inputs)?
        .iter()
        .map(|p| load_trace(p))
        .collect::<Result<_>>()?;
    let merged = DecodeTrace::merged("analysis", &traces);
    let report = separation_report(&merged)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("separation.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let mut w = csv::Writer::from_path(out.join("js_histogram.csv"))?;
    w.write_record(["bin_lo", "bin_hi", "accepted", "rejected"])?;
    for b in 0..HISTOGRAM_BINS {
        w.write_record([
            format!("{:.2}", b as f64 * HISTOGRAM_BIN_WIDTH),
            format!("{:.2}", (b + 1) as f64 * HISTOGRAM_BIN_WIDTH),
            report.histogram.accepted[b].to_string(),
            report.histogram.rejected[b].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(report)
}
