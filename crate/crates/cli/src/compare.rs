//! `adasd compare`: column-by-column difference of two summary CSVs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::run::SUMMARY_HEADER;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDiff {
    pub method: String,
    pub column: String,
    pub left: Option<f64>,
    pub right: Option<f64>,
    /// `right - left` when both sides have a value.
    pub delta: Option<f64>,
}

type Table = BTreeMap<String, Vec<Option<f64>>>;

fn read_summary(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    if r.headers()?.iter().ne(SUMMARY_HEADER) {
        bail!("{} does not have a summary header", path.display());
    }
    let mut table = Table::new();
    for rec in r.records() {
        let rec = rec?;
        let values = rec
            .iter()
            .skip(1)
            .map(|v| match v {
                "-" => Ok(None),
                v => v.parse().map(Some).with_context(|| format!("bad number {v:?} in {}", path.display())),
            })
            .collect::<Result<_>>()?;
        table.insert(rec[0].to_string(), values);
    }
    Ok(table)
}

/// Methods present in only one file appear with the other side empty.
pub fn cmd_compare(left: &Path, right: &Path) -> Result<Vec<CellDiff>> {
    let (a, b) = (read_summary(left)?, read_summary(right)?);
    let mut methods: Vec<&String> = a.keys().chain(b.keys()).collect();
    methods.sort();
    methods.dedup();
    let mut out = Vec::new();
    for m in methods {
        for (c, column) in SUMMARY_HEADER[1..].iter().enumerate() {
            let l = a.get(m).and_then(|r| r[c]);
            let r = b.get(m).and_then(|r| r[c]);
            out.push(CellDiff {
                method: m.clone(),
                column: column.to_string(),
                left: l,
                right: r,
                delta: l.zip(r).map(|(l, r)| r - l),
            });
        }
    }
    Ok(out)
}

pub fn write_diff_csv(path: &Path, diffs: &[CellDiff]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "column", "left", "right", "delta"])?;
    let f = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
    for d in diffs {
        w.write_record([d.method.clone(), d.column.clone(), f(d.left), f(d.right), f(d.delta)])?;
    }
    w.flush()?;
    Ok(())
}
