use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::saddlesearch::{RunRecord, TraceRow};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn csv_header(dim: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    h.extend((0..dim).map(|i| format!("x_{i}")));
    h.extend(["dist_sq", "grad_norm_sq", "cumulative_evals"].map(String::from));
    h
}

/// Writes the trace as CSV; `dim` sets the header when there are no rows.
pub fn write_trace_csv(record: &RunRecord, dim: usize, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(csv_header(dim)).map_err(csv_err(path))?;
    for row in &record.rows {
        let mut fields = Vec::with_capacity(dim + 4);
        fields.push(row.n.to_string());
        fields.extend(row.x.iter().map(|v| format_f64(*v)));
        fields.push(format_opt(row.dist_sq));
        fields.push(format_opt(row.grad_norm_sq));
        fields.push(row.cumulative_evals.to_string());
        w.write_record(&fields).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn parse_field<T: std::str::FromStr>(path: &Path, field: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Config {
        context: path.display().to_string(),
        message: format!("cannot parse CSV field `{field}`"),
    })
}

/// Reads a trace written by [`write_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let width = r.headers().map_err(csv_err(path))?.len();
    if width < 4 {
        return Err(Error::Config {
            context: path.display().to_string(),
            message: "trace CSV needs at least four columns".into(),
        });
    }
    let dim = width - 4;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_field(path, s).map(Some)
            }
        };
        rows.push(TraceRow {
            n: parse_field(path, &rec[0])?,
            x: (1..=dim).map(|i| parse_field(path, &rec[i])).collect::<Result<_>>()?,
            dist_sq: opt(&rec[dim + 1])?,
            grad_norm_sq: opt(&rec[dim + 2])?,
            cumulative_evals: parse_field(path, &rec[dim + 3])?,
        });
    }
    Ok(rows)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir.to_path_buf())
}
