//! Run reports and their JSON / CSV encodings.
//!
//! Floating-point numbers are written with 17 significant digits in
//! scientific notation (`-1.0000000000000000e0`) in both formats, so the CSV
//! rows carry exactly the same values as the JSON leaves.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::Result;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Parameters {
    pub observable: Option<String>,
    pub mode: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub sigma: Option<f64>,
    pub n_particles: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Output of one CLI invocation. `analytic` holds closed-form results,
/// `sampled` Monte Carlo results, each with its sample size and standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub command: String,
    pub parameters: Parameters,
    pub analytic: Value,
    pub sampled: Value,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunReport {
    pub fn new(scenario: &str, command: &str, parameters: Parameters) -> Self {
        Self {
            scenario: scenario.to_string(),
            command: command.to_string(),
            parameters,
            analytic: Value::Null,
            sampled: Value::Null,
            notes: Vec::new(),
            timing: None,
        }
    }

    pub fn to_value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_json(&mut buf, &self.to_value()?)?;
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_csv(&mut buf, &self.to_value()?)?;
        Ok(String::from_utf8(buf).expect("csv emits UTF-8"))
    }
}

/// Render a float with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct SignificantDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SignificantDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn write_json<W: Write>(writer: &mut W, value: &Value) -> Result<()> {
    let fmt = SignificantDigits {
        inner: PrettyFormatter::new(),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut *writer, fmt);
    value.serialize(&mut ser)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Flatten a JSON tree into `(path, value)` leaves. Paths use `.key` and
/// `[index]` segments.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    flatten_into(value, String::new(), &mut out);
    out
}

fn flatten_into(value: &Value, path: String, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) if !map.is_empty() => {
            for (k, v) in map {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                flatten_into(v, p, out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, v) in items.iter().enumerate() {
                flatten_into(v, format!("{path}[{i}]"), out);
            }
        }
        Value::Object(_) => out.push((path, "{}".into())),
        Value::Array(_) => out.push((path, "[]".into())),
        Value::Null => out.push((path, "null".into())),
        Value::Bool(b) => out.push((path, b.to_string())),
        Value::String(s) => out.push((path, s.clone())),
        Value::Number(n) => {
            let s = if n.is_f64() {
                format_f64(n.as_f64().expect("f64 number"))
            } else {
                n.to_string()
            };
            out.push((path, s));
        }
    }
}

pub fn write_csv<W: Write>(writer: &mut W, value: &Value) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["key", "value"])?;
    for (k, v) in flatten(value) {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

/// `{"value", "n", "standard_error"}` for a sampled quantity.
pub fn sampled(value: f64, n: u64, standard_error: f64) -> Value {
    serde_json::json!({ "value": value, "n": n, "standard_error": standard_error })
}
