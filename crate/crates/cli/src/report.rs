use std::fmt::Write as _;

use serde_json::Value;

/// Ordered key/value results, printed as `key=value` lines or one JSON
/// object.
#[derive(Debug, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut r = Report::default();
        r.put("version", env!("CARGO_PKG_VERSION"));
        r.put("command", command);
        r.put("seed", seed);
        r
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    pub fn matrix(&mut self, key: &str, rows: &[Vec<f64>]) -> &mut Self {
        self.put(
            key,
            rows.iter()
                .map(|r| Value::from(r.clone()))
                .collect::<Vec<_>>(),
        )
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let body: Vec<String> = self
                .entries
                .iter()
                .map(|(k, v)| format!("  {}: {}", Value::from(k.as_str()), v))
                .collect();
            format!("{{\n{}\n}}\n", body.join(",\n"))
        } else {
            let mut out = String::new();
            for (k, v) in &self.entries {
                let _ = writeln!(out, "{k}={}", flat(v));
            }
            out
        }
    }
}

// Lists are comma separated, nested lists (matrix rows) semicolon separated.
fn flat(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) if items.iter().any(Value::is_array) => {
            items.iter().map(flat).collect::<Vec<_>>().join(";")
        }
        Value::Array(items) => items.iter().map(flat).collect::<Vec<_>>().join(","),
        Value::Null => "nan".into(),
        other => other.to_string(),
    }
}
