//! One JSON object per run: command, resolved configuration, result payload,
//! wall time and tool version. The `result` payload is deterministic for a
//! fixed configuration and thread count; only `elapsed_ms` varies.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub tool_version: &'static str,
    pub threads: usize,
    pub config: Value,
    pub result: Value,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("report values are JSON-representable")
    }
}

pub fn append_line(path: &Path, line: &str) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")
}

/// Plain CSV; fields are numbers or identifiers, so no quoting is needed.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut f = io::BufWriter::new(File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()
}

/// Shortest round-tripping decimal; non-finite values as `nan`/`inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}
