//! Deterministic report emission.
//!
//! Floating-point values are written with 17 significant digits, which
//! round-trips every finite f64 exactly; field order follows insertion
//! order, so serializing the same result twice yields identical bytes.

use std::io::Write;
use std::path::PathBuf;

use chaoscope_core::{Algorithm, CertificateKind, ChaosCertificate};
use ndarray::Array2;

fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone)]
pub enum JsonValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Array(Vec<JsonValue>),
    Object(JsonMap),
}

#[derive(Debug, Clone, Default)]
pub struct JsonMap {
    entries: Vec<(String, JsonValue)>,
}

impl JsonMap {
    pub fn new() -> Self {
        JsonMap::default()
    }

    pub fn push(&mut self, key: &str, value: JsonValue) {
        self.entries.push((key.to_string(), value));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, JsonValue::Float(value));
    }

    pub fn push_int(&mut self, key: &str, value: i64) {
        self.push(key, JsonValue::Int(value));
    }

    pub fn push_bool(&mut self, key: &str, value: bool) {
        self.push(key, JsonValue::Bool(value));
    }

    pub fn push_str(&mut self, key: &str, value: &str) {
        self.push(key, JsonValue::Str(value.to_string()));
    }

    pub fn push_matrix(&mut self, key: &str, m: &Array2<f64>) {
        let rows = m
            .rows()
            .into_iter()
            .map(|r| JsonValue::Array(r.iter().map(|&v| JsonValue::Float(v)).collect()))
            .collect();
        self.push(key, JsonValue::Array(rows));
    }

    /// Nest a certificate under the `certificate` key with the same field
    /// names and order the library's serde representation uses.
    pub fn push_certificate(&mut self, cert: &ChaosCertificate) {
        let mut inner = JsonMap::new();
        inner.push_str(
            "kind",
            match cert.kind {
                CertificateKind::Domination => "domination",
                CertificateKind::Lp => "lp",
                CertificateKind::GraphicalFamily => "graphical_family",
                CertificateKind::PotentialNegativity => "potential_negativity",
            },
        );
        inner.push_str(
            "algorithm",
            match cert.algorithm {
                Algorithm::Mwu => "MWU",
                Algorithm::Omwu => "OMWU",
            },
        );
        inner.push_f64("region_delta", cert.region_delta);
        inner.push_f64("cbar_lower", cert.cbar_lower);
        inner.push_f64("lyapunov_exponent", cert.lyapunov_exponent);
        inner.push_f64("paper_exponent", cert.paper_exponent);
        self.push("certificate", JsonValue::Object(inner));
    }

    pub fn into_value(self) -> JsonValue {
        JsonValue::Object(self)
    }
}

fn escape_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn write_value(out: &mut String, value: &JsonValue) {
    match value {
        JsonValue::Float(v) => out.push_str(&format_f64(*v)),
        JsonValue::Int(v) => out.push_str(&v.to_string()),
        JsonValue::Bool(v) => out.push_str(if *v { "true" } else { "false" }),
        JsonValue::Str(s) => {
            out.push('"');
            out.push_str(&escape_json(s));
            out.push('"');
        }
        JsonValue::Array(items) => {
            out.push('[');
            for (idx, item) in items.iter().enumerate() {
                if idx > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        JsonValue::Object(map) => {
            out.push('{');
            for (idx, (key, item)) in map.entries.iter().enumerate() {
                if idx > 0 {
                    out.push(',');
                }
                out.push('"');
                out.push_str(&escape_json(key));
                out.push_str("\":");
                write_value(out, item);
            }
            out.push('}');
        }
    }
}

pub fn json_to_writer_17(w: &mut impl Write, value: &JsonValue) -> std::io::Result<()> {
    let mut text = String::new();
    write_value(&mut text, value);
    text.push('\n');
    w.write_all(text.as_bytes())
}

/// Row-oriented CSV with a mandatory header and 17-significant-digit
/// floats.
pub struct CsvWriter {
    header: Vec<String>,
    lines: Vec<String>,
}

pub struct RowBuilder {
    fields: Vec<String>,
}

impl RowBuilder {
    pub fn int(&mut self, v: i64) {
        self.fields.push(v.to_string());
    }

    pub fn float(&mut self, v: f64) {
        self.fields.push(format_f64(v));
    }
}

impl CsvWriter {
    pub fn new(header: Vec<&str>) -> Self {
        CsvWriter {
            header: header.into_iter().map(|s| s.to_string()).collect(),
            lines: Vec::new(),
        }
    }

    pub fn new_owned(header: Vec<String>) -> Self {
        CsvWriter {
            header,
            lines: Vec::new(),
        }
    }

    pub fn row(&mut self, fill: impl FnOnce(&mut RowBuilder)) {
        let mut builder = RowBuilder { fields: Vec::new() };
        fill(&mut builder);
        debug_assert_eq!(builder.fields.len(), self.header.len());
        self.lines.push(builder.fields.join(","));
    }

    pub fn finish(self, out: &Option<PathBuf>) -> anyhow::Result<()> {
        let mut text = self.header.join(",");
        text.push('\n');
        for line in &self.lines {
            text.push_str(line);
            text.push('\n');
        }
        match out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_the_text_form() {
        for v in [8.0, 0.1296, 1.0 / 3.0, -2.2250738585072014e-308, 1.76] {
            let text = format_f64(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back, v, "text {text}");
        }
    }

    #[test]
    fn serialization_is_byte_deterministic() {
        let build = || {
            let mut map = JsonMap::new();
            map.push_f64("r_Z", 8.0);
            map.push_bool("certified", true);
            map.push_str("kind", "lp");
            let mut text = Vec::new();
            json_to_writer_17(&mut text, &map.into_value()).unwrap();
            text
        };
        assert_eq!(build(), build());
    }
}
