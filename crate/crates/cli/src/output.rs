//! Tables rendered as CSV or JSON with 12 significant digits.

use clap::ValueEnum;
use nqi::Complex64;
use serde_json::{json, Map, Number, Value};

pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Complex(Complex64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Real)
    }
}

impl From<Complex64> for Cell {
    fn from(v: Complex64) -> Self {
        Cell::Complex(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// `%.12g`-style rendering: shortest of fixed and scientific notation with
/// trailing zeros removed.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s.to_string()
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    let re = fmt_real(z.re);
    let im = fmt_real(z.im.abs());
    let sign = if z.im.is_sign_negative() && im != "0" { '-' } else { '+' };
    format!("{re}{sign}{im}i")
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => fmt_real(*v),
            Cell::Complex(z) => fmt_complex(*z),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Real(v) => fmt_real(*v)
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Complex(z) => Value::String(fmt_complex(*z)),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub command: String,
    /// Run metadata (seed, parameters), written as a leading `#` line in CSV.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&'static str]) -> Self {
        Self { command: command.into(), meta: Vec::new(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = format!("# nqi {}", self.command);
        for (k, v) in &self.meta {
            out.push_str(&format!(" {k}={v}"));
        }
        out.push('\n');
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("write to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("write to memory");
        }
        let bytes = w.into_inner().expect("flush to memory");
        out.push_str(std::str::from_utf8(&bytes).expect("utf-8 cells"));
        out
    }

    fn json(&self) -> String {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
            .collect();
        let doc = json!({ "command": self.command, "meta": meta, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_real(0.25), "0.25");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_real(-1.0 / 3.0), "-0.333333333333");
        assert_eq!(fmt_real(0.99999999999999), "1");
        assert_eq!(fmt_real(1.5e-13), "1.5e-13");
        assert_eq!(fmt_real(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_real(-2e-17), "-2e-17");
        assert_eq!(fmt_real(4096.0), "4096");
    }

    #[test]
    fn complex_literals() {
        assert_eq!(fmt_complex(Complex64::new(0.6, -0.8)), "0.6-0.8i");
        assert_eq!(fmt_complex(Complex64::new(-0.5, 0.0)), "-0.5+0i");
        assert_eq!(fmt_complex(Complex64::new(0.0, -0.0)), "0+0i");
    }

    #[test]
    fn csv_has_meta_and_header() {
        let mut t = Table::new("demo", &["N", "p", "f"]);
        t.meta("seed", 7);
        t.push(vec![2usize.into(), 0.25.into(), Cell::Missing]);
        assert_eq!(t.render(Format::Csv), "# nqi demo seed=7\nN,p,f\n2,0.25,\n");
        let j: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(j["rows"][0]["p"], json!(0.25));
        assert_eq!(j["rows"][0]["f"], Value::Null);
        assert_eq!(j["meta"]["seed"], json!("7"));
    }
}
