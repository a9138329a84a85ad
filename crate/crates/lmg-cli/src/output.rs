//! Deterministic result tables.
//!
//! Every subcommand produces one [`Table`]; the renderers here turn it
//! into CSV or JSON bytes. Floats print through Rust's shortest
//! round-trip formatting, so re-reading a file reproduces the exact
//! binary values and identical runs produce identical bytes.

use serde_json::{json, Value};

/// One table entry. `Missing` renders as an empty CSV cell and JSON null.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    U(u64),
    I(i64),
    F(f64),
    S(String),
    B(bool),
    Missing,
}

impl Cell {
    fn render_csv(&self) -> String {
        match self {
            Cell::U(v) => v.to_string(),
            Cell::I(v) => v.to_string(),
            Cell::F(v) => format_float(*v),
            Cell::S(v) => v.clone(),
            Cell::B(v) => v.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn render_json(&self) -> Value {
        match self {
            Cell::U(v) => json!(v),
            Cell::I(v) => json!(v),
            Cell::F(v) => {
                if v.is_finite() {
                    json!(v)
                } else {
                    Value::Null
                }
            }
            Cell::S(v) => json!(v),
            Cell::B(v) => json!(v),
            Cell::Missing => Value::Null,
        }
    }
}

/// Shortest decimal string that parses back to the same f64. NaN and
/// infinities become empty cells; they carry no reusable value.
fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Column-labelled rows plus run metadata.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with `#`-prefixed metadata lines, a header row, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render_csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON mirror of the CSV: same metadata, columns, and row order.
    pub fn to_json(&self) -> String {
        let metadata: Vec<Value> = self
            .metadata
            .iter()
            .map(|(k, v)| json!({ "key": k, "value": v }))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| Value::Array(row.iter().map(Cell::render_json).collect()))
            .collect();
        let doc = json!({
            "metadata": metadata,
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("tables serialize");
        text.push('\n');
        text
    }

    pub fn render(&self, format: crate::config::OutputFormat) -> String {
        match format {
            crate::config::OutputFormat::Csv => self.to_csv(),
            crate::config::OutputFormat::Json => self.to_json(),
        }
    }
}

/// Parse a CSV produced by [`Table::to_csv`] back into header and rows
/// of strings, skipping metadata. Round-trip tests and downstream
/// refits rely on this inverse.
pub fn parse_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()?
        .split(',')
        .map(|s| s.to_string())
        .collect::<Vec<_>>();
    let rows = lines
        .map(|line| line.split(',').map(|s| s.to_string()).collect())
        .collect();
    Some((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OutputFormat;

    #[test]
    fn csv_round_trips_every_float_bit_pattern_tried() {
        let values = [
            0.1,
            -0.25,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            5e-324,
            -1.7976931348623157e308,
            0.0,
        ];
        let mut table = Table::new(&["x"]);
        for &v in &values {
            table.push(vec![Cell::F(v)]);
        }
        let (_, rows) = parse_csv(&table.to_csv()).unwrap();
        for (row, &want) in rows.iter().zip(&values) {
            let got: f64 = row[0].parse().unwrap();
            assert_eq!(got.to_bits(), want.to_bits());
        }
    }

    #[test]
    fn metadata_and_missing_cells_render_stably() {
        let mut table = Table::new(&["n", "value", "label"]);
        table.meta("command", "demo");
        table.meta("seed", "7");
        table.push(vec![Cell::U(100), Cell::Missing, Cell::S("ok".into())]);
        table.push(vec![Cell::U(200), Cell::F(f64::NAN), Cell::B(true)]);
        let csv = table.to_csv();
        assert_eq!(
            csv,
            "# command = demo\n# seed = 7\nn,value,label\n100,,ok\n200,,true\n"
        );
        let json: serde_json::Value = serde_json::from_str(&table.to_json()).unwrap();
        assert_eq!(json["rows"][0][1], serde_json::Value::Null);
        assert_eq!(json["rows"][1][1], serde_json::Value::Null);
        assert_eq!(json["columns"][2], "label");
        assert_eq!(json["metadata"][1]["value"], "7");
    }

    #[test]
    fn render_dispatches_on_format() {
        let mut table = Table::new(&["k"]);
        table.push(vec![Cell::I(-3)]);
        assert!(table.render(OutputFormat::Csv).starts_with("k\n-3\n"));
        assert!(table.render(OutputFormat::Json).contains("\"columns\""));
    }
}
