use std::fs;
use std::path::{Path, PathBuf};

use mothersolve::C64;
use serde::Serialize;

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest decimal that round-trips the double.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && (x.abs() < 1e-5 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DecPoint {
    pub re: String,
    pub im: String,
}

impl From<C64> for DecPoint {
    fn from(z: C64) -> Self {
        DecPoint { re: num(z.re), im: num(z.im) }
    }
}

/// One CSV row in the fixed (s, re, im, value) layout.
#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub s: f64,
    pub z: C64,
    pub value: f64,
}

pub fn dir(base: &Path, parts: &[&str]) -> Result<PathBuf, Failure> {
    let mut p = base.to_path_buf();
    for part in parts {
        p.push(part);
    }
    fs::create_dir_all(&p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    Ok(p)
}

/// Directory name for one insertion point, from the configured decimal text.
pub fn w_dir(w: &str) -> String {
    format!("w_{w}")
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Io(format!("{}: {e}", path.display()));
    let mut wr = csv::Writer::from_path(path).map_err(io)?;
    wr.write_record(["s", "re", "im", "value"]).map_err(io)?;
    for r in rows {
        wr.write_record([num(r.s), num(r.z.re), num(r.z.im), num(r.value)]).map_err(io)?;
    }
    wr.flush().map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// CSV with a custom header; every field already formatted.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Io(format!("{}: {e}", path.display()));
    let mut wr = csv::Writer::from_path(path).map_err(io)?;
    wr.write_record(header).map_err(io)?;
    for r in rows {
        wr.write_record(r).map_err(io)?;
    }
    wr.flush().map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// `m` points equally spaced in arclength along the polyline, endpoints included.
pub fn resample(points: &[C64], m: usize) -> Vec<(f64, C64)> {
    resample_values(points, &vec![0.0; points.len()], m).into_iter().map(|(s, z, _)| (s, z)).collect()
}

/// As [`resample`], carrying a per-vertex value along by linear interpolation.
pub fn resample_values(points: &[C64], values: &[f64], m: usize) -> Vec<(f64, C64, f64)> {
    assert_eq!(points.len(), values.len());
    let mut cum = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (i, z) in points.iter().enumerate() {
        if i > 0 {
            acc += (z - points[i - 1]).norm();
        }
        cum.push(acc);
    }
    let last = points.len() - 1;
    if last == 0 {
        return vec![(0.0, points[0], values[0]); m];
    }
    let total = acc;
    let mut out = Vec::with_capacity(m);
    let mut k = 0;
    for j in 0..m {
        if j + 1 == m {
            out.push((total, points[last], values[last]));
            break;
        }
        let s = total * j as f64 / (m - 1) as f64;
        while k + 1 < last && cum[k + 1] < s {
            k += 1;
        }
        let seg = cum[k + 1] - cum[k];
        let f = if seg > 0.0 { (s - cum[k]) / seg } else { 0.0 };
        out.push((s, points[k] + (points[k + 1] - points[k]) * f, values[k] + (values[k + 1] - values[k]) * f));
    }
    out
}
