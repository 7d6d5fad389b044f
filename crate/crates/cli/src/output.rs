use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::Failure;

/// Console formatting: 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Table formatting: 17 significant digits, enough to round-trip.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn meta(command: &str, fields: Value) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if let Value::Object(extra) = fields {
        m.extend(extra);
    }
    Value::Object(m)
}

pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn json_document(meta: Value, key: &str, body: Value) -> String {
    let mut doc = Map::new();
    doc.insert("meta".into(), meta);
    doc.insert(key.into(), body);
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
    s.push('\n');
    s
}

/// A key/value record for the console, one field per line.
pub fn text_record(fields: &[(&str, String)]) -> String {
    let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    fields.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Compute(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::Compute(format!("cannot write output: {e}")))
        }
    }
}
