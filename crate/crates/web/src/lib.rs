//! Browser bindings: analyze a program, export its path constraints as
//! SMT-LIB scripts, and list the operation catalog.
//!
//! The `*_text` functions hold the logic and are callable from native code;
//! the exported wrappers only convert errors for JavaScript.

use serde_json::{json, Value};
use tslcheck_core::config::{parse_config, AnalysisConfig};
use tslcheck_core::report::{analyze_source, explore};
use tslcheck_core::shapeops::catalog;
use tslcheck_core::solver::emit_smtlib;
use wasm_bindgen::prelude::*;

const FILE: &str = "input.tsl";

const EXAMPLES: [(&str, &str, &str); 4] = [
    ("mnist_mlp_bad_linear", include_str!("../../../corpus/mnist_mlp_bad_linear.tsl"), "{}"),
    ("image_reshape", include_str!("../../../corpus/image_reshape.tsl"), "{}"),
    (
        "ntxent_residual",
        include_str!("../../../corpus/ntxent_residual.tsl"),
        include_str!("../../../corpus/ntxent_residual.json"),
    ),
    (
        "stochastic_resnet_bad_shortcut",
        include_str!("../../../corpus/stochastic_resnet_bad_shortcut.tsl"),
        include_str!("../../../corpus/stochastic_resnet_bad_shortcut.json"),
    ),
];

fn config(text: &str) -> Result<AnalysisConfig, String> {
    if text.trim().is_empty() {
        return Ok(AnalysisConfig::default());
    }
    parse_config(text).map_err(|e| format!("config: {e}"))
}

/// The report for `source`, as JSON when `format` is "json" and as text
/// otherwise.
pub fn analyze_text(source: &str, config_json: &str, format: &str) -> Result<String, String> {
    let cfg = config(config_json)?;
    let report = analyze_source(source, FILE, &cfg).map_err(|e| e.to_string())?;
    Ok(if format == "json" { report.to_json() } else { report.render_human() })
}

/// One SMT-LIB script per path, each preceded by a comment naming the path.
pub fn smt2_text(source: &str, config_json: &str) -> Result<String, String> {
    let cfg = config(config_json)?;
    let explored = explore(source, FILE, &cfg).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for p in &explored.execution.paths {
        out.push_str(&format!("; path {}\n", p.id));
        match emit_smtlib(&p.state.constraints) {
            Ok(script) => out.push_str(&script),
            Err(e) => out.push_str(&format!("; not exported: {e}\n")),
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn catalog_value() -> Value {
    Value::Array(
        catalog()
            .iter()
            .map(|r| {
                json!({
                    "name": r.name,
                    "aliases": r.aliases,
                    "params": r.params,
                    "result": r.result,
                    "constraints": r.constraints,
                    "extrapolated": r.extrapolated,
                })
            })
            .collect(),
    )
}

pub fn examples_value() -> Value {
    Value::Array(
        EXAMPLES
            .iter()
            .map(|(name, source, config)| json!({ "name": name, "source": source, "config": config }))
            .collect(),
    )
}

#[wasm_bindgen]
pub fn analyze(source: &str, config_json: &str, format: &str) -> Result<String, JsValue> {
    analyze_text(source, config_json, format).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn smt2(source: &str, config_json: &str) -> Result<String, JsValue> {
    smt2_text(source, config_json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn catalog_json() -> String {
    catalog_value().to_string()
}

#[wasm_bindgen]
pub fn examples_json() -> String {
    examples_value().to_string()
}
