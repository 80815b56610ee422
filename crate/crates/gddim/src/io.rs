//! CSV reading/writing shared by the CLI commands.
//!
//! Point files are plain CSV, one row per point, '.' decimal separators,
//! floats written with 17 significant digits so they round-trip exactly.
//! Metadata lines are prefixed with '#' and skipped on read.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Format a float with full round-trip precision (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Row-major matrix of points together with its dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    pub data: Vec<f64>,
    pub n: usize,
    pub d: usize,
}

impl Points {
    pub fn new(data: Vec<f64>, d: usize) -> Result<Points> {
        if d == 0 || data.len() % d != 0 {
            return Err(Error::Format(format!(
                "point data of length {} is not a multiple of dim {d}",
                data.len()
            )));
        }
        let n = data.len() / d;
        Ok(Points { data, n, d })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// Write points to CSV, preceded by '#'-prefixed metadata lines.
pub fn write_points_csv(path: &Path, points: &Points, metadata: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for i in 0..points.n {
        let row: Vec<String> = points.row(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a CSV of points, skipping '#' comment lines and blank lines.
pub fn read_points_csv(path: &Path) -> Result<Points> {
    let text = fs::read_to_string(path)?;
    parse_points_csv(&text).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_points_csv(text: &str) -> Result<Points> {
    let mut data = Vec::new();
    let mut d = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad float '{f}'", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if d == 0 {
            d = vals.len();
        } else if vals.len() != d {
            return Err(Error::Format(format!(
                "line {}: expected {d} columns, found {}",
                lineno + 1,
                vals.len()
            )));
        }
        data.extend(vals);
    }
    if d == 0 {
        return Err(Error::Format("no data rows".into()));
    }
    Points::new(data, d)
}
