//! Bit-stable text output: every float is written with 17 significant
//! digits in `d.dddddddddddddddde±x` form, non-finite values as `null` in
//! JSON and an empty field in CSV.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use std::io::{self, Write};
use std::path::Path;

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Sig17(PrettyFormatter<'static>);

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Accumulates CSV text with a fixed header.
pub struct CsvTable {
    text: String,
    columns: usize,
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(&'static str),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n", columns: header.len() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        let fields: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(x) => fmt_f64(x),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s.to_string(),
                Cell::Empty => String::new(),
            })
            .collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Orders of the guidance corrections echoed in every JSON summary next to
/// the measured values.
#[derive(Debug, Clone, Serialize)]
pub struct PaperClaims {
    pub d_s_d_r: &'static str,
    pub d_s_d_theta: &'static str,
    pub d_s_d_phi: &'static str,
    pub order_r: i32,
    pub order_phi: i32,
    pub trajectory: &'static str,
}

pub fn paper_claims() -> PaperClaims {
    PaperClaims {
        d_s_d_r: "p0 + O(l0^-7)",
        d_s_d_theta: "0",
        d_s_d_phi: "delta l0 + O(l0^-5)",
        order_r: -7,
        order_phi: -5,
        trajectory: "Kepler ellipse up to the corrections above",
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: ErrorBody<'a>,
}

/// Machine-readable error document.
pub fn error_json(e: &Error) -> String {
    to_json(&ErrorDoc { error: ErrorBody { kind: e.kind(), message: e.to_string() } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_floats() {
        #[derive(Serialize)]
        struct T {
            a: f64,
            b: Vec<f64>,
            n: u32,
        }
        let s = to_json(&T { a: 0.5, b: vec![1.0, f64::INFINITY], n: 3 });
        assert!(s.contains("\"a\": 5.0000000000000000e-1"));
        assert!(s.contains("null"));
        assert!(s.contains("\"n\": 3"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"], 0.5);
    }

    #[test]
    fn csv_rows() {
        let mut t = CsvTable::new(&["x", "k", "s"]);
        t.row(vec![Cell::Num(1.0), Cell::Int(-2), Cell::Text("ok")]);
        t.row(vec![Cell::Empty, Cell::Int(0), Cell::Text("wkb_guard")]);
        assert_eq!(t.into_string(), "x,k,s\n1.0000000000000000e0,-2,ok\n,0,wkb_guard\n");
    }
}
