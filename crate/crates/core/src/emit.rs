//! JSON and CSV output with stable field order.
//!
//! JSON documents are `{"schema_version": 1, "kind": ..., "report": ...}`.
//! Floats in both formats carry 17 significant digits (`d.dddddddddddddddde±x`),
//! enough to round-trip every f64; non-finite floats become `null` in JSON and
//! empty cells in CSV.

use std::io::{self, Write};
use std::path::Path;

use num_bigint::BigInt;
use serde::{Serialize, Serializer};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Serializes a big integer as a decimal string.
pub fn ser_bigint<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}"))),
        }
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(format_float(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

fn to_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

/// Versioned JSON document, one trailing newline.
pub fn to_json<T: Serialize>(kind: &str, report: &T) -> Result<String> {
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "report": serde_json::to_value(report).map_err(to_err)?,
    });
    let mut buf = Vec::new();
    {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, PrettyDigits::default());
        doc.serialize(&mut ser).map_err(to_err)?;
    }
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Pretty printer with two-space indentation and 17-digit floats.
#[derive(Default)]
struct PrettyDigits {
    indent: usize,
    has_value: bool,
}

impl PrettyDigits {
    fn newline<W: ?Sized + Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.indent {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl Formatter for PrettyDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        Digits17.write_f64(w, value)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        Digits17.write_f32(w, value)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(w)?;
        }
        w.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(w)?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

/// Single-line JSON with 17-digit floats.
pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser).map_err(to_err)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.to_string(),
            (_, Some(u)) => u.to_string(),
            _ => format_float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(" "),
        Value::Object(_) => serde_json::to_string(v).unwrap_or_default(),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV with a header taken from `T::default()`'s fields, in declaration
/// order. Arrays are space-separated inside one cell.
pub fn to_csv<T: Serialize + Default>(rows: &[T]) -> Result<String> {
    let header = match serde_json::to_value(T::default()).map_err(to_err)? {
        Value::Object(m) => m.keys().cloned().collect::<Vec<_>>(),
        _ => return Err(Error::InvalidArgument("CSV rows must be structs".into())),
    };
    let mut out = header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in rows {
        let v = serde_json::to_value(r).map_err(to_err)?;
        let line: Vec<String> = header.iter().map(|h| quote(&cell(&v[h.as_str()]))).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, Default, Serialize)]
    struct Row {
        name: String,
        z: f64,
        a: Option<f64>,
        v: Vec<i64>,
    }

    fn rows() -> Vec<Row> {
        vec![
            Row {
                name: "x,y".into(),
                z: 0.1,
                a: None,
                v: vec![1, -2],
            },
            Row {
                name: "p".into(),
                z: 1.0 / 3.0,
                a: Some(-2.5e-300),
                v: vec![],
            },
        ]
    }

    #[test]
    fn csv_header_order_and_cells() {
        let s = to_csv(&rows()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "name,z,a,v");
        assert_eq!(lines[1], "\"x,y\",1.0000000000000001e-1,,1 -2");
        assert_eq!(lines[2], "p,3.3333333333333331e-1,-2.5000000000000000e-300,");
        assert_eq!(to_csv::<Row>(&[]).unwrap(), "name,z,a,v\n");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-310, -7.25e200, 123456789.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(digits.len(), 17, "{s}");
        }
    }

    #[test]
    fn json_round_trips_and_is_stable() {
        let r = rows();
        let a = to_json("rows", &r).unwrap();
        assert_eq!(a, to_json("rows", &r).unwrap());
        let back: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(back["schema_version"], SCHEMA_VERSION);
        assert_eq!(back["kind"], "rows");
        assert_eq!(back["report"], serde_json::to_value(&r).unwrap());
        let keys: Vec<&String> = back["report"][0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["name", "z", "a", "v"]);
        assert_eq!(to_json_line(&f64::NAN).unwrap(), "null");
        let line = to_json_line(&r[1]).unwrap();
        assert_eq!(line, r#"{"name":"p","z":3.3333333333333331e-1,"a":-2.5000000000000000e-300,"v":[]}"#);
    }
}
