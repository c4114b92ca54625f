//! Tables and reports with a provenance line, written as CSV or JSON.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::args::Format;

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
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

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float17(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// What a command produces. Reports carry a table for CSV output.
pub enum Payload {
    Table(Table),
    Report { report: Value, table: Table },
}

pub struct Outcome {
    pub payload: Payload,
    /// A diagnostic check failed.
    pub failed: bool,
}

pub fn config_hash(config: &Value) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn render(command: &str, config: &Value, payload: &Payload, format: Format) -> String {
    let hash = config_hash(config);
    match format {
        Format::Csv => {
            let table = match payload {
                Payload::Table(t) | Payload::Report { table: t, .. } => t,
            };
            let mut out = format!("# hardy {command} config-hash={hash}\n");
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let line: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(out, "{}", line.join(",")).unwrap();
            }
            out
        }
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("command".into(), json!(command));
            doc.insert("config_hash".into(), json!(hash));
            doc.insert("config".into(), config.clone());
            match payload {
                Payload::Table(t) => {
                    doc.insert("columns".into(), json!(t.columns));
                    let rows: Vec<Value> = t
                        .rows
                        .iter()
                        .map(|row| {
                            let obj: Map<String, Value> =
                                t.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                            Value::Object(obj)
                        })
                        .collect();
                    doc.insert("rows".into(), Value::Array(rows));
                }
                Payload::Report { report, .. } => {
                    doc.insert("report".into(), report.clone());
                }
            }
            let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("report serializes");
            text.push('\n');
            text
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 2.0 - 2f64.sqrt(), 1e-300, -3.5e17, 1.0 / 3.0] {
            let s = float17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(float17(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["vertex", "w"]);
        t.push(vec!["(1;0)".into(), 0.5.into()]);
        t.push(vec!["a,b".into(), 1.0.into()]);
        let text = render("green", &json!({"x": 1}), &Payload::Table(t), Format::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# hardy green config-hash="));
        assert_eq!(lines[1], "vertex,w");
        assert_eq!(lines[2], "(1;0),5.0000000000000000e-1");
        assert_eq!(lines[3], "\"a,b\",1.0000000000000000e0");
    }

    #[test]
    fn hash_depends_on_config() {
        assert_ne!(config_hash(&json!({"seed": 1})), config_hash(&json!({"seed": 2})));
        assert_eq!(config_hash(&json!({"seed": 1})), config_hash(&json!({"seed": 1})));
    }
}
