//! CSV and JSON writers. Every file carries the resolved configuration.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const SCHEMA: &str = "rankrace-output/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    U(usize),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // Debug formatting is the shortest representation that round-trips
            Cell::F(x) => format!("{:?}", x),
            Cell::U(n) => n.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => json_f64(*x),
            Cell::U(n) => json!(n),
            Cell::B(b) => json!(b),
            Cell::S(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::U(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::B(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

/// Non-finite values become strings so that the document stays valid JSON.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("NaN")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Validation(format!("unknown format `{}` (csv, json)", text))),
        }
    }

    /// Explicit choice, else the extension of the output path, else CSV.
    pub fn resolve(explicit: Option<&str>, out: Option<&Path>) -> Result<Self, CliError> {
        match explicit {
            Some(f) => Self::parse(f),
            None => Ok(match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("json") => Format::Json,
                _ => Format::Csv,
            }),
        }
    }
}

/// Result of one subcommand: tables plus scalar summary values.
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub summary: Vec<(&'static str, Value)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self { command, config: Map::new(), summary: Vec::new(), tables: Vec::new() }
    }

    pub fn summary(&mut self, key: &'static str, value: impl Into<Value>) {
        self.summary.push((key, value.into()));
    }

    pub fn summary_f64(&mut self, key: &'static str, value: f64) {
        self.summary.push((key, json_f64(value)));
    }

    fn summary_line(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{}={}", k, s),
                other => format!("{}={}", k, other),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn header(&self) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# rankrace {} {}", VERSION, self.command);
        let _ = writeln!(h, "# config: {}", Value::Object(self.config.clone()));
        if !self.summary.is_empty() {
            let _ = writeln!(h, "# summary: {}", self.summary_line());
        }
        h
    }

    fn csv(&self, table: &Table) -> String {
        let mut s = self.header();
        if table.name != "main" {
            let _ = writeln!(s, "# table: {}", table.name);
        }
        let _ = writeln!(s, "{}", table.columns.join(","));
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    fn json(&self) -> String {
        let tables: Map<String, Value> = self
            .tables
            .iter()
            .map(|t| {
                let rows: Vec<Value> = t.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                (t.name.to_string(), json!({ "columns": t.columns, "rows": rows }))
            })
            .collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let doc = json!({
            "schema": SCHEMA,
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "summary": summary,
            "tables": tables,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Writes the report. The first table goes to `out` (or stdout); in CSV
    /// mode further tables go to `<stem>_<name>.csv` next to it.
    pub fn write(&self, out: Option<&Path>, format: Format) -> Result<Vec<PathBuf>, CliError> {
        eprintln!("{} {}", self.command, self.summary_line());
        let mut written = Vec::new();
        match format {
            Format::Json => {
                emit(out, &self.json())?;
                written.extend(out.map(Path::to_path_buf));
            }
            Format::Csv => {
                for (i, table) in self.tables.iter().enumerate() {
                    let text = self.csv(table);
                    if i == 0 {
                        emit(out, &text)?;
                        written.extend(out.map(Path::to_path_buf));
                    } else if let Some(path) = out {
                        let side = sibling(path, table.name);
                        emit(Some(&side), &text)?;
                        written.push(side);
                    } else {
                        emit(None, &text)?;
                    }
                }
            }
        }
        Ok(written)
    }
}

pub fn sibling(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{}_{}.{}", stem, name, ext))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {}", p.display(), e)))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}
