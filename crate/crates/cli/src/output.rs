//! Tabular results and their CSV / JSON encodings.

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Number(x) => format_number(*x),
            Cell::Integer(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => csv_escape(s),
        }
    }

    fn json(&self) -> Value {
        match self {
            // NaN and infinities have no JSON literal
            Cell::Number(x) if !x.is_finite() => Value::String(format_number(*x)),
            Cell::Number(x) => json!(x),
            Cell::Integer(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Number(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Integer(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// 17 significant digits, which round-trips every double.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub engine: String,
    pub version: String,
    pub config_sha256: String,
}

impl Provenance {
    pub fn for_config(bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self { engine: "cqed".into(), version: cqed::VERSION.into(), config_sha256: hex }
    }
}

/// One task's result: a table plus optional structured extras.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub task: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra top-level JSON members; emitted as `#` comment lines in CSV.
    pub extras: Vec<(String, Value)>,
}

impl Output {
    pub fn new(task: &str, columns: &[&str]) -> Self {
        Self {
            task: task.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            extras: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn extra(&mut self, key: &str, value: Value) {
        self.extras.push((key.into(), value));
    }

    pub fn to_csv(&self, provenance: &Provenance) -> String {
        let mut out = format!(
            "# engine={} version={} config_sha256={} task={}\n",
            provenance.engine, provenance.version, provenance.config_sha256, self.task
        );
        for (key, value) in &self.extras {
            out.push_str(&format!("# {key}={value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, provenance: &Provenance) -> String {
        let mut root = Map::new();
        root.insert("provenance".into(), json!(provenance));
        root.insert("task".into(), json!(self.task));
        root.insert("columns".into(), json!(self.columns));
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        root.insert("rows".into(), Value::Array(rows));
        for (key, value) in &self.extras {
            root.insert(key.clone(), value.clone());
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
        text.push('\n');
        text
    }
}
