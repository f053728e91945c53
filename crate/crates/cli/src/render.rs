//! JSON, CSV and text renderings of a report.

use serde_json::Value;

use crate::config::OutputFormat;
use crate::run::Outcome;

pub fn render(outcome: &Outcome, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            // serde_json maps are ordered by key, so output is stable
            let mut s = serde_json::to_string_pretty(&outcome.report).expect("report is valid JSON");
            s.push('\n');
            s
        }
        OutputFormat::Csv => csv(&outcome.report),
        OutputFormat::Text => text(outcome),
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(_) | Value::Object(_) => None,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        // matrix records `{rows, cols, re, im}` are JSON-only
        Value::Object(m) if m.contains_key("re") && m.contains_key("im") && m.contains_key("rows") => {}
        Value::Object(m) => {
            for (k, child) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        // arrays (matrices, vectors, lists) are left to the JSON output
        Value::Array(_) => {}
        other => out.push((prefix.to_string(), scalar(other).unwrap_or_default())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Two-column `key,value` table of every scalar in the report.
pub fn csv(report: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", report, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        s.push_str(&csv_field(&k));
        s.push(',');
        s.push_str(&csv_field(&v));
        s.push('\n');
    }
    s
}

fn text(outcome: &Outcome) -> String {
    let r = &outcome.report;
    let mut s = String::new();
    let command = r["command"].as_str().unwrap_or("?");
    s.push_str(&format!("posmap {command}\n"));
    if let Some(map) = r.get("map") {
        s.push_str(&format!("  map: {}\n", map["family"].as_str().unwrap_or("?")));
    }
    s.push_str(&format!("  seed: {}  trials: {}\n", r["seed"], r["trials"]));
    let highlights = [
        ("build", "choi_min_eigenvalue"),
        ("positivity_scan", "min_value"),
        ("witness", "min_eigenvalue"),
        ("witness", "min_product_expectation"),
        ("detect", "detection_value"),
        ("detect", "expected_value"),
        ("optimality", "min_singular_value"),
        ("nd_optimality", "covariance_residual"),
        ("certify", "assembled_min_eigenvalue"),
    ];
    for (section, key) in highlights {
        if let Some(v) = r.get(section).and_then(|x| x.get(key)) {
            if !v.is_null() {
                s.push_str(&format!("  {section}.{key}: {v}\n"));
            }
        }
    }
    if let Some(Value::Object(checks)) = r.get("checks") {
        for (name, ok) in checks {
            let mark = if ok.as_bool() == Some(true) { "ok  " } else { "FAIL" };
            s.push_str(&format!("  [{mark}] {name}\n"));
        }
    }
    s.push_str(if outcome.passed() { "result: pass\n" } else { "result: fail\n" });
    s
}
