//! Result tables: CSV with a `#`-prefixed JSON metadata line, or one JSON document.

use std::io::{self, Write};
use std::path::Path;

use fracbranch::solver::ProfileRow;
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: RunConfig,
    pub seed: u64,
    /// Seconds spent estimating.
    pub wall_time: f64,
    pub version: String,
}

impl Metadata {
    pub fn new(config: RunConfig, wall_time: f64) -> Self {
        Self { seed: config.seed, config, wall_time, version: env!("CARGO_PKG_VERSION").to_string() }
    }
}

/// One output row; `exact` and `error` are empty when the problem has no known solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub point: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub exact: Option<f64>,
    pub error: Option<f64>,
}

impl From<&ProfileRow> for Row {
    fn from(r: &ProfileRow) -> Self {
        Self {
            point: r.point.clone(),
            mean: r.estimate.mean,
            stderr: r.estimate.stderr,
            n: r.estimate.n,
            exact: r.exact,
            error: r.error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonTable {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
}

/// Shortest round-tripping decimal, switching to exponent form for very small or large magnitudes.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Coordinates joined by spaces, so a point fits in one CSV field.
pub fn format_point(point: &[f64]) -> String {
    point.iter().map(|&c| format_number(c)).collect::<Vec<_>>().join(" ")
}

fn optional(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn render(format: Format, metadata: &Metadata, rows: &[Row]) -> io::Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            writeln!(buf, "# {}", serde_json::to_string(metadata)?)?;
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(["point", "mean", "stderr", "n", "exact", "error"])?;
                for r in rows {
                    w.write_record([
                        format_point(&r.point),
                        format_number(r.mean),
                        format_number(r.stderr),
                        r.n.to_string(),
                        optional(r.exact),
                        optional(r.error),
                    ])?;
                }
                w.flush()?;
            }
            Ok(buf)
        }
        Format::Json => {
            let table = JsonTable { metadata: metadata.clone(), rows: rows.to_vec() };
            let mut buf = serde_json::to_vec_pretty(&table)?;
            buf.push(b'\n');
            Ok(buf)
        }
    }
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
