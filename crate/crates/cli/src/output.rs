use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Result of one command: the full JSON record, a flat table for CSV output,
/// and whether every guarantee or threshold held.
pub struct Outcome {
    pub record: Value,
    pub rows: Vec<Map<String, Value>>,
    pub passed: bool,
}

impl Outcome {
    pub fn new(record: impl Serialize, rows: Vec<Map<String, Value>>, passed: bool) -> Self {
        Self {
            record: serde_json::to_value(record).expect("records serialize"),
            rows,
            passed,
        }
    }
}

/// Builds a flat CSV row from `(column, value)` pairs.
#[macro_export]
macro_rules! row {
    ($($key:expr => $value:expr),* $(,)?) => {{
        let mut m = serde_json::Map::new();
        $(m.insert($key.to_string(), serde_json::json!($value));)*
        m
    }};
}

pub fn render(outcome: &Outcome, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&outcome.record).expect("records serialize");
            s.push('\n');
            s
        }
        Format::Csv => csv(&outcome.rows),
    }
}

fn csv(rows: &[Map<String, Value>]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let header: Vec<&String> = first.keys().collect();
    let mut out = header.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = header
            .iter()
            .map(|k| match row.get(k.as_str()) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_first_row_columns() {
        let rows = vec![row!("n" => 4, "time" => 0.5), row!("n" => 8, "time" => Value::Null)];
        assert_eq!(csv(&rows), "n,time\n4,0.5\n8,\n");
    }

    #[test]
    fn empty_table_is_empty() {
        assert_eq!(csv(&[]), "");
    }
}
