//! CSV and JSON emission with fixed number formatting.
//!
//! Numbers are written with 12 significant digits in scientific notation, so
//! identical runs produce identical bytes. JSON documents use the CSV column
//! names as object keys and the same number text.

use std::fmt::Write as _;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "nan".to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(x) => number(*x),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

fn json_field(c: &Cell) -> String {
    match c {
        Cell::Num(x) if x.is_finite() => number(*x),
        Cell::Num(_) => "null".to_string(),
        Cell::Text(s) => serde_json::to_string(s).expect("string serializes"),
    }
}

fn table_csv(t: &Table, out: &mut String) {
    out.push_str(&t.columns.join(","));
    out.push('\n');
    for r in &t.rows {
        let fields: Vec<String> = r.iter().map(csv_field).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
}

fn table_json(t: &Table, indent: &str, out: &mut String) {
    out.push('[');
    for (i, r) in t.rows.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(indent);
        out.push_str("  {");
        for (j, (k, v)) in t.columns.iter().zip(r).enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "\"{k}\": {}", json_field(v));
        }
        out.push('}');
    }
    if !t.rows.is_empty() {
        out.push('\n');
        out.push_str(indent);
    }
    out.push(']');
}

/// A single table renders bare; several render as named sections.
pub fn render(tables: &[Table], format: Format) -> String {
    let mut out = String::new();
    match (format, tables) {
        (Format::Csv, [t]) => table_csv(t, &mut out),
        (Format::Csv, ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# {}", t.name);
                table_csv(t, &mut out);
            }
        }
        (Format::Json, [t]) => {
            table_json(t, "", &mut out);
            out.push('\n');
        }
        (Format::Json, ts) => {
            out.push('{');
            for (i, t) in ts.iter().enumerate() {
                out.push_str(if i == 0 { "\n  " } else { ",\n  " });
                let _ = write!(out, "\"{}\": ", t.name);
                table_json(t, "  ", &mut out);
            }
            out.push_str("\n}\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("rows", &["mode", "x"]);
        t.push(vec!["cold".into(), 1415.65.into()]);
        t.push(vec!["hot".into(), f64::NAN.into()]);
        t
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(number(1415.65), "1.41565000000e3");
        assert_eq!(number(-2.5e-9), "-2.50000000000e-9");
    }

    #[test]
    fn csv_layout() {
        assert_eq!(render(&[sample()], Format::Csv), "mode,x\ncold,1.41565000000e3\nhot,nan\n");
    }

    #[test]
    fn json_is_parseable_and_mirrors_columns() {
        let text = render(&[sample()], Format::Json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0]["mode"], "cold");
        assert_eq!(v[0]["x"].as_f64(), Some(1415.65));
        assert!(v[1]["x"].is_null());
        let two = render(&[sample(), sample()], Format::Json);
        let v: serde_json::Value = serde_json::from_str(&two).unwrap();
        assert_eq!(v["rows"][1]["mode"], "hot");
    }

    #[test]
    fn sections_are_labelled() {
        let text = render(&[sample(), sample()], Format::Csv);
        assert!(text.starts_with("# rows\nmode,x\n"));
        assert_eq!(text.matches("# rows").count(), 2);
    }
}
