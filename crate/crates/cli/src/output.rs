use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::config::{number, Resolved};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// A delay through a channel that carries no flux.
    Inf,
    Text(&'static str),
}

impl Cell {
    /// 17 significant digits, enough to round-trip any double.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Inf => "inf".to_owned(),
            Cell::Text(s) => (*s).to_owned(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => number(*x),
            Cell::Inf => Value::String("inf".to_owned()),
            Cell::Text(s) => Value::String((*s).to_owned()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Gnuplot hint: x column and the y columns to draw against it.
    pub plot: (usize, Vec<usize>),
    pub log_y: bool,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| (*s).to_owned()).collect(),
            rows: Vec::new(),
            plot: (0, (1..columns.len()).collect()),
            log_y: false,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(BufWriter::new(file));
                let to_io = |e: csv::Error| CliError::io(path, e.into());
                w.write_record(&self.columns).map_err(to_io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv)).map_err(to_io)?;
                }
                w.flush().map_err(|e| CliError::io(path, e))
            }
            Format::Json => {
                let body = serde_json::json!({
                    "columns": self.columns,
                    "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                });
                write_json(path, &body)
            }
        }
    }

    pub fn gnuplot(&self, data: &Path, format: Format) -> Option<String> {
        if format != Format::Csv {
            return None;
        }
        let (x, ys) = &self.plot;
        let name = data.file_name()?.to_string_lossy();
        let mut s = String::new();
        s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
        s.push_str(&format!("set xlabel '{}'\n", self.columns[*x]));
        if self.log_y {
            s.push_str("set logscale y\n");
        }
        let curves: Vec<String> = ys.iter().map(|y| format!("'{name}' using {}:{} with lines", x + 1, y + 1)).collect();
        s.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
        Some(s)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    w.write_all(b"\n").and_then(|()| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `spectrum.csv` → `spectrum.manifest.json`.
pub fn manifest_path(data: &Path) -> PathBuf {
    data.with_extension("manifest.json")
}

/// `pulse.csv` → `pulse_front.csv`.
pub fn sibling(data: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{stem}{suffix}.{ext}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub tolerance: Value,
    pub passed: bool,
}

impl Check {
    /// Passes when `value` < `tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value: number(value), tolerance: number(tolerance), passed: value < tolerance }
    }

    /// Passes when `value` ≤ `tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value: number(value), tolerance: number(tolerance), passed: value <= tolerance }
    }

    /// A check that could not be evaluated because its computation failed.
    pub fn errored(name: impl Into<String>, error: impl std::fmt::Display) -> Self {
        Self { name: name.into(), value: Value::String(error.to_string()), tolerance: Value::Null, passed: false }
    }

    pub fn holds(name: impl Into<String>, passed: bool) -> Self {
        Self { name: name.into(), value: Value::Bool(passed), tolerance: Value::Bool(true), passed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub scenario: &'static str,
    pub config: BTreeMap<String, Value>,
    pub config_sources: BTreeMap<String, &'static str>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl Manifest {
    pub fn new(scenario: &'static str, config: Resolved) -> Self {
        Self {
            artifact: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            scenario,
            config: config.values,
            config_sources: config.sources,
            tolerances: BTreeMap::new(),
            results: BTreeMap::new(),
            checks: Vec::new(),
            files: Vec::new(),
            passed: true,
            runtime_seconds: None,
        }
    }

    pub fn tolerance(&mut self, name: &'static str, value: f64) -> f64 {
        self.tolerances.insert(name, value);
        value
    }

    pub fn result(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.results.insert(key.into(), v);
    }

    pub fn check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}
