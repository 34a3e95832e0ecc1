//! Report assembly and rendering. JSON reports are byte-deterministic for a
//! fixed config and seed except for the single `timestamp` field; CSV floats
//! carry 17 significant digits so values round-trip exactly.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::experiments::{AssertionRecord, SweepMetrics};

#[derive(Debug, Serialize)]
pub struct Report {
    pub config_echo: Value,
    pub library_version: String,
    pub experiment: String,
    pub metrics: Map<String, Value>,
    pub assertions: Vec<AssertionRecord>,
    /// Unix seconds at report creation; the only nondeterministic field.
    pub timestamp: u64,
}

/// 17 significant digits, scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

fn csv_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => sci(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.replace(',', ";"),
        Value::Array(items) => items
            .iter()
            .map(csv_cell)
            .collect::<Vec<_>>()
            .join(";"),
        Value::Object(_) => String::new(),
    }
}

/// One `kind,name,value,pass,tolerance` row per metric and assertion.
pub fn render_run_csv(report: &Report) -> String {
    let mut out = String::from("kind,name,value,pass,tolerance\n");
    for (name, value) in &report.metrics {
        out.push_str(&format!("metric,{name},{},,\n", csv_cell(value)));
    }
    for assertion in &report.assertions {
        out.push_str(&format!(
            "assertion,{},{},{},{}\n",
            assertion.name,
            sci(assertion.value),
            assertion.pass,
            sci(assertion.tolerance)
        ));
    }
    out
}

fn option_cell(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// Fixed sweep header; list-valued cells join their elements with ';'.
pub const SWEEP_HEADER: &str = "param,value,discrepancy,off_diagonal_norm,p,nu_sq";

pub fn render_sweep_row(param: &str, value: f64, metrics: &SweepMetrics) -> String {
    let p = metrics
        .probabilities
        .as_ref()
        .map(|list| list.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(";"))
        .unwrap_or_default();
    let nu = metrics
        .nu_squared
        .as_ref()
        .map(|list| {
            list.iter()
                .map(|x| option_cell(*x))
                .collect::<Vec<_>>()
                .join(";")
        })
        .unwrap_or_default();
    format!(
        "{param},{},{},{},{p},{nu}\n",
        sci(value),
        option_cell(metrics.discrepancy),
        option_cell(metrics.off_diagonal_norm),
    )
}
