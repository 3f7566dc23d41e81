//! Deterministic CSV and JSON tables with a configuration header.
//!
//! CSV files start with `#`-prefixed lines giving the tool version, the
//! command and the full configuration as TOML, followed by a named column
//! row. Floats are written with 17 significant digits, lines end in LF.
//! JSON files carry the same information as one object.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => format_float(*v),
            Self::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Int(v) => json!(v),
            Self::Float(v) if v.is_finite() => json!(v),
            Self::Float(v) => json!(format_float(*v)),
            Self::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_owned())
    }
}

/// 17 significant digits; `inf`, `-inf` and `NaN` for the non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Context echoed at the top of every output file.
#[derive(Debug, Clone, Copy)]
pub struct Header<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
}

fn render_csv(header: Header<'_>, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("# qpeh {VERSION}\n# command = \"{}\"\n", header.command).as_bytes());
    for line in header.config.to_toml().lines() {
        out.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let csv_err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

fn render_json(header: Header<'_>, table: &Table) -> Result<Vec<u8>, CliError> {
    let config = serde_json::to_value(header.config).map_err(|e| CliError::Output(e.to_string()))?;
    let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
    let doc = json!({
        "version": VERSION,
        "command": header.command,
        "config": config,
        "columns": table.columns,
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Writes `<dir>/<stem>.<ext>` and returns its path.
pub fn write_table(dir: &Path, stem: &str, format: Format, header: Header<'_>, table: &Table) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let bytes = match format {
        Format::Csv => render_csv(header, table)?,
        Format::Json => render_json(header, table)?,
    };
    fs::write(&path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Command, TimeRatio};

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_layout() {
        let mut cfg = RunConfig::defaults(Command::Figure1);
        cfg.time_ratios = vec![TimeRatio(0.1), TimeRatio::INFINITE];
        let mut t = Table::new(vec!["j", "value", "tag"]);
        t.push(vec![1usize.into(), 0.5.into(), "a".into()]);
        let bytes = render_csv(Header { command: "figure1", config: &cfg }, &t).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with(&format!("# qpeh {VERSION}\n# command = \"figure1\"\n")));
        assert!(text.contains("# time_ratios = [0.1, \"inf\"]\n"));
        assert!(text.ends_with("j,value,tag\n1,5.0000000000000000e-1,a\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn json_layout() {
        let cfg = RunConfig::defaults(Command::Gge);
        let mut t = Table::new(vec!["t", "x"]);
        t.push(vec![f64::INFINITY.into(), 0.25.into()]);
        let bytes = render_json(Header { command: "gge", config: &cfg }, &t).unwrap();
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["rows"][0][0], json!("inf"));
        assert_eq!(v["rows"][0][1], json!(0.25));
        assert_eq!(v["config"]["time_ratios"][0], json!("inf"));
        assert_eq!(v["columns"][1], json!("x"));
    }
}
