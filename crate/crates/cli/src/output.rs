//! Shared renderers: 15-significant-digit numbers, CSV assembly and the
//! optional JSON mirror of scan tables.

use serde_json::{json, Value};

use crate::CmdError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// 15 significant digits, locale-independent.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

/// A scan table: fixed header, rows of already-rendered cells.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::new();
                out.push_str(&self.header.join(","));
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (key, cell) in self.header.iter().zip(row.iter()) {
                            obj.insert((*key).to_string(), json!(cell));
                        }
                        Value::Object(obj)
                    })
                    .collect();
                let mut text = serde_json::to_string_pretty(&Value::Array(rows))
                    .expect("tables serialize");
                text.push('\n');
                text
            }
        }
    }
}

/// Writes to the path when given, stdout otherwise.
pub fn emit(out: Option<&std::path::Path>, text: &str) -> Result<(), CmdError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CmdError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
