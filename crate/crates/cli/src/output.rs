//! Report envelope and its JSON/CSV renderings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

/// A command's result before it is wrapped with the configuration.
pub struct Outcome {
    pub passed: bool,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub result: Value,
    /// Rows for CSV output; without one the result is flattened into
    /// `key,value` rows.
    pub table: Option<Table>,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub fn envelope(command: &str, config: Value, outcome: &Outcome) -> Value {
    json!({
        "schema": SCHEMA,
        "tool": "lpiso",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "tolerances": outcome.tolerances,
        "passed": outcome.passed,
        "result": outcome.result,
    })
}

pub fn render(format: Format, report: &Value, table: Option<&Table>) -> Result<Vec<u8>, csv::Error> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("reports serialize");
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            match table {
                Some(t) => {
                    w.write_record(&t.header)?;
                    for row in &t.rows {
                        w.write_record(row.iter().map(|x| number(*x)))?;
                    }
                }
                None => {
                    w.write_record(["key", "value"])?;
                    let mut rows = Vec::new();
                    flatten(report, String::new(), &mut rows);
                    for (k, v) in rows {
                        w.write_record([k, v])?;
                    }
                }
            }
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
    }
}

/// Shortest round-tripping decimal, `.` as separator.
fn number(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

fn flatten(v: &Value, prefix: String, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(x, key(k), out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(x, key(&i.to_string()), out);
            }
        }
        Value::String(s) => out.push((prefix, s.clone())),
        Value::Null => out.push((prefix, String::new())),
        other => out.push((prefix, other.to_string())),
    }
}

pub fn write(bytes: &[u8], out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
    }
}
