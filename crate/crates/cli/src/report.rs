use std::fmt::Write as _;
use std::time::Duration;

use serde_json::{json, Map, Value};

/// Deterministic part of a command's output.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub command: &'static str,
    pub graph: Option<Value>,
    pub results: Value,
    /// False when a reproduction check failed.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    body: Value,
    elapsed: Duration,
}

impl RunReport {
    pub fn new(invocation: &[String], body: Body, elapsed: Duration) -> Self {
        let mut tree = Map::new();
        tree.insert("command".into(), json!(body.command));
        tree.insert("invocation".into(), json!(invocation));
        if let Some(g) = body.graph {
            tree.insert("graph".into(), g);
        }
        tree.insert("results".into(), body.results);
        tree.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        RunReport {
            body: Value::Object(tree),
            elapsed,
        }
    }

    pub fn body(&self) -> &Value {
        &self.body
    }

    /// `{"body": ..., "timing": {...}}`, keys sorted, one trailing newline.
    pub fn to_json(&self) -> String {
        let doc = json!({
            "body": self.body,
            "timing": { "elapsed_seconds": self.elapsed.as_secs_f64() },
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        render(&mut out, &self.body, 0);
        let _ = writeln!(out, "elapsed: {:.3}s", self.elapsed.as_secs_f64());
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// One line per row: scalars and short arrays inline.
fn inline(v: &Value) -> String {
    if let Some(s) = scalar(v) {
        return s;
    }
    match v {
        Value::Array(items) => format!("[{}]", items.iter().map(inline).collect::<Vec<_>>().join(", ")),
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| format!("{k}={}", inline(v)))
            .collect::<Vec<_>>()
            .join("  "),
        _ => unreachable!(),
    }
}

fn render(out: &mut String, v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    let Value::Object(map) = v else {
        let _ = writeln!(out, "{pad}{}", inline(v));
        return;
    };
    for (key, value) in map {
        match value {
            Value::Object(_) => {
                let _ = writeln!(out, "{pad}{key}:");
                render(out, value, indent + 2);
            }
            Value::Array(items) if items.iter().any(|i| i.is_object()) => {
                let _ = writeln!(out, "{pad}{key}: ({} rows)", items.len());
                for item in items {
                    let _ = writeln!(out, "{pad}  {}", inline(item));
                }
            }
            _ => {
                let _ = writeln!(out, "{pad}{key}: {}", inline(value));
            }
        }
    }
}
