use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Writes `contents` to `path` via a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Sidecar path: the output path with its extension replaced by `.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Shortest decimal that round-trips. `Debug` rather than `Display` so that
/// tiny and huge magnitudes use an exponent instead of hundreds of zeros.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn csv_spectrum(grid: &[f64], values: &[f64]) -> String {
    let mut out = String::with_capacity(32 * grid.len());
    out.push_str("omega,s_value\n");
    for (w, s) in grid.iter().zip(values) {
        let _ = writeln!(out, "{},{}", fmt_f64(*w), fmt_f64(*s));
    }
    out
}

/// Parses `omega,s_value` rows written by `csv_spectrum`.
pub fn parse_spectrum_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("omega,s_value") => {}
        other => return Err(format!("expected header 'omega,s_value', found {other:?}")),
    }
    let (mut grid, mut values) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |f: Option<&str>| -> Result<f64, String> {
            f.ok_or_else(|| format!("line {}: missing field", k + 2))?
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("line {}: {e}", k + 2))
        };
        grid.push(parse(fields.next())?);
        values.push(parse(fields.next())?);
        if fields.next().is_some() {
            return Err(format!("line {}: too many fields", k + 2));
        }
    }
    Ok((grid, values))
}

/// Grid given as `min:max:points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, points] = parts.as_slice() else {
            return Err(format!("grid '{s}' is not min:max:points"));
        };
        let min: f64 = min.parse().map_err(|e| format!("grid min '{min}': {e}"))?;
        let max: f64 = max.parse().map_err(|e| format!("grid max '{max}': {e}"))?;
        let points: usize = points.parse().map_err(|e| format!("grid points '{points}': {e}"))?;
        if points < 2 {
            return Err("a grid needs at least 2 points".into());
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(format!("grid needs finite min < max, got {min}:{max}"));
        }
        Ok(Self { min, max, points })
    }
}

/// `min:max` range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("range '{s}' is not min:max"))?;
        let min: f64 = a.parse().map_err(|e| format!("range min '{a}': {e}"))?;
        let max: f64 = b.parse().map_err(|e| format!("range max '{b}': {e}"))?;
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(format!("range needs finite min < max, got {s}"));
        }
        Ok(Self { min, max })
    }
}
