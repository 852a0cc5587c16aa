//! Tables and their CSV / JSON rendering.
//!
//! Every file starts with a header recording the library version, the command,
//! a SHA-256 hash of the configuration, the grid and the seed. CSV files hold one or
//! more tables, each introduced by a `# table: <name>` line.

use std::fmt::Write as _;

use serde_json::{json, Map, Value as Json};

use crate::config::{Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<i32> for Value {
    fn from(x: i32) -> Self {
        Value::Int(x.into())
    }
}

impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Value::Int(x)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(x: Option<T>) -> Self {
        x.map(Into::into).unwrap_or(Value::Missing)
    }
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Int(x) => x.to_string(),
            Value::Num(x) => num(*x),
            Value::Bool(x) => x.to_string(),
            Value::Missing => String::new(),
            Value::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Value::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Int(x) => json!(x),
            Value::Num(x) if x.is_finite() => json!(x),
            Value::Num(x) => json!(num(*x)),
            Value::Bool(x) => json!(x),
            Value::Text(s) => json!(s),
            Value::Missing => Json::Null,
        }
    }
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x != 0.0 && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// The result of one command: tables plus the assertions that failed.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
    pub plot: Option<crate::plot::Plot>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub fn header(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    vec![
        ("version", format!("hardy-tree {VERSION}")),
        ("command", cfg.command.name().to_string()),
        ("config", cfg.hash()),
        ("input", cfg.input_name()),
        ("p", num(cfg.p.p())),
        ("grid", cfg.grid.cells().to_string()),
        ("seed", cfg.seed.to_string()),
    ]
}

pub fn render_csv(cfg: &RunConfig, report: &Report) -> String {
    let mut s = String::new();
    for (k, v) in header(cfg) {
        let _ = writeln!(s, "# {k}: {v}");
    }
    for (i, t) in report.tables.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "# table: {}", t.name);
        let _ = writeln!(s, "{}", t.columns.join(","));
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(Value::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
    }
    s
}

pub fn render_json(cfg: &RunConfig, report: &Report) -> String {
    let mut head = Map::new();
    for (k, v) in header(cfg) {
        head.insert(k.to_string(), Json::String(v));
    }
    let tables: Vec<Json> = report
        .tables
        .iter()
        .map(|t| {
            let rows: Vec<Json> = t
                .rows
                .iter()
                .map(|r| Json::Object(t.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
                .collect();
            json!({ "name": t.name, "columns": t.columns, "rows": rows })
        })
        .collect();
    let doc = json!({ "header": head, "tables": tables, "failures": report.failures });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

pub fn render(cfg: &RunConfig, report: &Report) -> String {
    match cfg.format {
        Format::Csv => render_csv(cfg, report),
        Format::Json => render_json(cfg, report),
    }
}

/// Reads back the named table of a CSV produced by [`render_csv`] as strings.
pub fn parse_csv_table(text: &str, name: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let marker = format!("# table: {name}");
    let mut lines = text.lines().skip_while(|l| *l != marker).skip(1);
    let columns = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .take_while(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Some((columns, rows))
}
