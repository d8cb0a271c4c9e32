//! Result emission. Every file carries the resolved config it came from, and
//! every float is written with 17 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig, CSV_MARKER};
use crate::CliError;

/// Line in a CSV result after which the embedded config starts.
pub const CONFIG_DELIMITER: &str = "# --- config ---";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => Value::from(*v),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Run-level values that do not fit the table.
    pub scalars: Vec<(String, Cell)>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.headers.len());
        self.rows.push(cells);
    }

    pub fn scalar(&mut self, key: &str, value: impl Into<Cell>) {
        self.scalars.push((key.to_string(), value.into()));
    }
}

struct SigDigits(PrettyFormatter<'static>);

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Output(format!("JSON encoding failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
}

fn render_json(command: &str, report: &Report, config: &RunConfig) -> Result<String, CliError> {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            Value::Object(
                report
                    .headers
                    .iter()
                    .zip(r)
                    .map(|(h, c)| (h.clone(), c.json()))
                    .collect(),
            )
        })
        .collect();
    let mut result = Map::new();
    for (k, v) in &report.scalars {
        result.insert(k.clone(), v.json());
    }
    result.insert("rows".into(), Value::Array(rows));

    let mut doc = Map::new();
    doc.insert("command".into(), Value::from(command));
    doc.insert("result".into(), Value::Object(result));
    doc.insert(
        "warnings".into(),
        Value::Array(report.warnings.iter().map(|w| Value::from(w.as_str())).collect()),
    );
    let config = serde_json::to_value(config).map_err(|e| CliError::Output(e.to_string()))?;
    doc.insert("config".into(), config);
    to_json(&Value::Object(doc))
}

fn render_csv(command: &str, report: &Report, config: &RunConfig) -> Result<String, CliError> {
    let mut out = format!("{CSV_MARKER} {command}\n");
    for (k, v) in &report.scalars {
        out.push_str(&format!("# {k}: {}\n", v.csv()));
    }
    for w in &report.warnings {
        out.push_str(&format!("# warning: {w}\n"));
    }
    out.push_str(CONFIG_DELIMITER);
    out.push('\n');
    let toml = toml::to_string(config).map_err(|e| CliError::Output(format!("TOML encoding failed: {e}")))?;
    for line in toml.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str(&format!("# {line}\n"));
        }
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(&report.headers).map_err(io_err)?;
    for r in &report.rows {
        w.write_record(r.iter().map(Cell::csv)).map_err(io_err)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| CliError::Output(e.to_string()))?);
    Ok(out)
}

pub fn render(command: &str, report: &Report, config: &RunConfig, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => render_csv(command, report, config),
        Format::Json => render_json(command, report, config),
    }
}

/// Writes to `path`, or stdout when there is none.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Output(format!("writing stdout: {e}")))
        }
    }
}
