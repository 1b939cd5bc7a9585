//! JSON and CSV rendering of reports.
//!
//! Floats are written with 17 significant digits (`1.2345678901234567e0`)
//! in both formats, so every value survives a round trip bit for bit and
//! the same report always produces the same bytes.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // Only reachable through CSV; JSON writes non-finite values as null.
        format!("{v}")
    }
}

/// Pretty-printed JSON with fixed-width float rendering.
struct Formatter17 {
    inner: PrettyFormatter<'static>,
}

impl Formatter for Formatter17 {
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        writer.write_all(format_float(value as f64).as_bytes())
    }

    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
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

pub fn to_json<T: Serialize + ?Sized>(report: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Formatter17 {
            inner: PrettyFormatter::new(),
        },
    );
    report.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Serialize(e.to_string()))
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Number(n) => {
            let text = if n.is_f64() {
                format_float(n.as_f64().unwrap_or(f64::NAN))
            } else {
                n.to_string()
            };
            out.push((prefix.to_string(), text))
        }
    }
}

fn row(value: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match value {
        Value::Object(_) => flatten("", value, &mut out),
        other => flatten("value", other, &mut out),
    }
    out
}

/// CSV with a header row. A top-level sequence becomes one row per element;
/// anything else is a single row. Nested fields are flattened into dotted
/// column names (`mean.0`, `cov.1.0`, …).
pub fn to_csv<T: Serialize + ?Sized>(report: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(report)?;
    let rows: Vec<Vec<(String, String)>> = match &value {
        Value::Array(items) => items.iter().map(row).collect(),
        other => vec![row(other)],
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<String> = match rows.first() {
        Some(first) => first.iter().map(|(k, _)| k.clone()).collect(),
        None => Vec::new(),
    };
    if !header.is_empty() {
        writer.write_record(&header)?;
    }
    for r in &rows {
        let keys: Vec<&String> = r.iter().map(|(k, _)| k).collect();
        if keys.len() != header.len() || keys.iter().zip(&header).any(|(a, b)| *a != b) {
            return Err(CliError::Serialize("rows with differing columns cannot share a CSV header".into()));
        }
        writer.write_record(r.iter().map(|(_, v)| v))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
}

pub fn render<T: Serialize + ?Sized>(report: &T, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
    }
}

/// Object keys in serialization order; used by tests to check schemas.
pub fn json_keys(value: &Value) -> Vec<String> {
    value
        .as_object()
        .map(|m: &Map<String, Value>| m.keys().cloned().collect())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cvconj::protocols::{epr_bound_experiment, run_estimation};
    use cvconj::{EprReport, EstimationReport, Strategy};

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(format_float(0.25), "2.5000000000000000e-1");
        assert_eq!(format_float(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn estimation_json_round_trips_with_exact_schema() {
        let report = run_estimation(Strategy::ConjugateEntangled, 1.0, 2.0, 1_000, 7).unwrap();
        let text = to_json(&report).unwrap();
        let back: EstimationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        let value: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(
            json_keys(&value),
            ["strategy", "shots", "true_x", "true_p", "est_var_x", "est_var_p", "stderr_x", "stderr_p", "seed"]
        );
        assert_eq!(value["strategy"], "conjugate_entangled");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn epr_csv_has_expected_header() {
        let rows: Vec<EprReport> = [0.0, 0.5].iter().map(|&r| epr_bound_experiment(r, 1.0).unwrap()).collect();
        let text = to_csv(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,sigma2,var_Xp,var_Pp,product"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0,2.0000000000000000e0,2.0000000000000000e0,4.0000000000000000e0")
        );
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        let json = to_json(&rows).unwrap();
        let back: Vec<EprReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn nested_values_flatten() {
        let v = serde_json::json!({"a": 1, "b": {"c": [0.5, 2.0]}, "d": "x"});
        let text = to_csv(&v).unwrap();
        assert_eq!(text, "a,b.c.0,b.c.1,d\n1,5.0000000000000000e-1,2.0000000000000000e0,x\n");
    }
}
