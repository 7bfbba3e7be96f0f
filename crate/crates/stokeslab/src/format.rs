//! Deterministic report serialization.
//!
//! Reports must be byte-identical across runs and machines for the same
//! inputs, so floating point values are always rendered in scientific
//! notation with 17 significant digits (enough to round-trip any f64) and
//! JSON objects keep their insertion order. serde_json is used for
//! parsing inputs; output goes through this module so the formatting
//! stays pinned.

use num_complex::Complex64 as C64;
use std::fmt::Write as _;

/// Renders a float with 17 significant digits, normalizing negative zero.
pub fn fmt_float(v: f64) -> String {
    assert!(v.is_finite(), "reports must not contain NaN or infinity");
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// JSON value with ordered object keys.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    pub fn complex(z: C64) -> Json {
        Json::Array(vec![Json::Float(z.re), Json::Float(z.im)])
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn object() -> JsonObject {
        JsonObject(Vec::new())
    }

    /// Pretty-prints with two-space indents and a trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Json::Float(v) => out.push_str(&fmt_float(*v)),
            Json::Str(s) => write_escaped(out, s),
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    pad(out, indent + 1);
                    item.write(out, indent + 1);
                }
                out.push('\n');
                pad(out, indent);
                out.push(']');
            }
            Json::Object(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    pad(out, indent + 1);
                    write_escaped(out, key);
                    out.push_str(": ");
                    value.write(out, indent + 1);
                }
                out.push('\n');
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

/// Builder that keeps insertion order.
#[derive(Debug, Clone)]
pub struct JsonObject(Vec<(String, Json)>);

impl JsonObject {
    pub fn field(mut self, key: &str, value: Json) -> Self {
        self.0.push((key.to_owned(), value));
        self
    }

    pub fn build(self) -> Json {
        Json::Object(self.0)
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn write_escaped(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Comma-separated table with a fixed header; cells are pre-formatted.
#[derive(Debug, Clone)]
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            header: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "ragged CSV row");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_fixed_width_scientific() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(2.85255e-4), "2.8525499999999999e-4");
    }

    #[test]
    fn float_formatting_round_trips() {
        for &v in &[
            1.0,
            -1.0 / 3.0,
            2.0_f64.sqrt(),
            6.02e23,
            5e-324,
            f64::MAX,
        ] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn object_order_is_insertion_order() {
        let j = Json::object()
            .field("zeta", Json::Int(1))
            .field("alpha", Json::Bool(false))
            .field("list", Json::Array(vec![Json::Null]))
            .build();
        let text = j.render();
        let zeta = text.find("zeta").unwrap();
        let alpha = text.find("alpha").unwrap();
        assert!(zeta < alpha);
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn strings_escape_control_characters() {
        let j = Json::str("a\"b\\c\nd\u{1}");
        assert_eq!(j.render(), "\"a\\\"b\\\\c\\nd\\u0001\"\n");
    }

    #[test]
    fn csv_renders_rows_in_order() {
        let mut t = Csv::new(&["x", "y"]);
        t.row(vec!["1".into(), fmt_float(0.5)]);
        t.row(vec!["2".into(), fmt_float(0.25)]);
        assert_eq!(
            t.render(),
            "x,y\n1,5.0000000000000000e-1\n2,2.5000000000000000e-1\n"
        );
    }
}
