//! Plain-text inputs and outputs: candidate and design CSVs, diagnostic
//! tables, SGD ratio tables and JSON metadata sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::design::Design;
use crate::error::{DesignError, Result};
use crate::kernel::CandidateSet;
use crate::sgd::RatioTable;

/// Decimal rendering with 17 significant digits and no exponent.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.16e}", v);
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{:.*}", decimals, v)
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| {
                DesignError::Parse(format!("line {lineno}: cannot parse `{}` as a number", f.trim()))
            })
        })
        .collect()
}

/// Rows of a numeric CSV, with the header (if any) split off.
fn read_table(path: &Path) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| DesignError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let mut header = None;
    let mut rows = Vec::new();
    if let Some((i, first)) = lines.next() {
        let is_header = first
            .split(',')
            .any(|f| f.trim().parse::<f64>().is_err());
        if is_header {
            header = Some(first.split(',').map(|f| f.trim().to_string()).collect());
        } else {
            rows.push(parse_row(first, i + 1)?);
        }
    }
    for (i, line) in lines {
        rows.push(parse_row(line, i + 1)?);
    }
    Ok((header, rows))
}

/// Candidate points from a CSV whose columns are coordinates (header optional).
pub fn read_candidates_csv(path: &Path) -> Result<CandidateSet> {
    let (_, rows) = read_table(path)?;
    CandidateSet::new(rows)
}

/// A design CSV as read back: candidate indices (when an `index` column is
/// present) and coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    pub indices: Option<Vec<usize>>,
    pub coords: Vec<Vec<f64>>,
}

/// Reads either `index,x1,..,xd` design files or bare coordinate files.
pub fn read_design_csv(path: &Path) -> Result<DesignTable> {
    let (header, rows) = read_table(path)?;
    let indexed = header
        .as_ref()
        .and_then(|h| h.first())
        .is_some_and(|c| c == "index");
    if !indexed {
        return Ok(DesignTable {
            indices: None,
            coords: rows,
        });
    }
    let mut indices = Vec::with_capacity(rows.len());
    let mut coords = Vec::with_capacity(rows.len());
    for (r, mut row) in rows.into_iter().enumerate() {
        let idx = row.remove(0);
        if idx < 0.0 || idx.fract() != 0.0 {
            return Err(DesignError::Parse(format!(
                "row {}: index {idx} is not a non-negative integer",
                r + 1
            )));
        }
        indices.push(idx as usize);
        coords.push(row);
    }
    Ok(DesignTable {
        indices: Some(indices),
        coords,
    })
}

fn coordinate_header(d: usize) -> String {
    (1..=d).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| DesignError::Io(format!("{}: {e}", path.display())))
}

/// `index,x1,..,xd` with one row per point; `indices` are written as given.
pub fn write_points_csv(path: &Path, indices: &[usize], coords: &[Vec<f64>]) -> Result<()> {
    let d = coords.first().map_or(0, |p| p.len());
    let mut out = format!("index,{}\n", coordinate_header(d));
    for (i, p) in indices.iter().zip(coords) {
        out.push_str(&i.to_string());
        for &v in p {
            out.push(',');
            out.push_str(&format_f64(v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_design_csv(path: &Path, design: &Design) -> Result<()> {
    write_points_csv(path, &design.indices, &design.coords)
}

fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format_f64(c[r])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// `h,f_hat,g_hat`
pub fn write_fg_csv(path: &Path, h: &[f64], f_hat: &[f64], g_hat: &[f64]) -> Result<()> {
    write_columns(path, &["h", "f_hat", "g_hat"], &[h, f_hat, g_hat])
}

/// `h,<name>` for a single nearest-neighbour function.
pub fn write_single_fn_csv(path: &Path, name: &str, h: &[f64], values: &[f64]) -> Result<()> {
    write_columns(path, &["h", name], &[h, values])
}

/// `r,k_hat,k_csr`
pub fn write_k_csv(path: &Path, r: &[f64], k_hat: &[f64], k_csr: &[f64]) -> Result<()> {
    write_columns(path, &["r", "k_hat", "k_csr"], &[r, k_hat, k_csr])
}

/// `batchsize,beta1,..,beta5` with one row per batch size.
pub fn write_ratio_csv(path: &Path, table: &RatioTable) -> Result<()> {
    let mut out = String::from("batchsize,beta1,beta2,beta3,beta4,beta5\n");
    for (bs, row) in table.batch_sizes.iter().zip(&table.ratios) {
        out.push_str(&bs.to_string());
        for &v in row {
            out.push(',');
            out.push_str(&format_f64(v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub command: String,
    /// Command-line arguments after the program name.
    pub args: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl RunMetadata {
    pub fn new(command: &str, args: Vec<String>, seed: u64) -> Self {
        RunMetadata {
            command: command.to_string(),
            args,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            details: serde_json::Map::new(),
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.details.insert(key.to_string(), v);
        self
    }
}

/// Path of the sidecar for `out`: `out` with `.meta.json` appended.
pub fn metadata_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_metadata(out: &Path, meta: &RunMetadata) -> Result<PathBuf> {
    let path = metadata_path(out);
    let mut text = serde_json::to_string_pretty(meta)
        .map_err(|e| DesignError::Io(format!("metadata: {e}")))?;
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}
