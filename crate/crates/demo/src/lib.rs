//! Browser demo: compare rule-combination methods at chosen slacks, plot
//! the ε-order curve of a quantity, and run scenario programs.
//!
//! The plain functions return JSON text and are what the native tests
//! exercise; the `#[wasm_bindgen]` wrappers expose them to JavaScript.

use std::collections::BTreeMap;

use belief_core::program::{execute_program, parse_program, render_reports, Format};
use belief_core::scalars::{parse_rational, rat, Mode, Rational};
use belief_core::scenarios::{epsilon_order, run_scenario, sweep, ParamValue, Params};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Comparison {
    method: &'static str,
    quantity: &'static str,
    value: String,
    approx: f64,
}

const METHODS: &[(&str, &str, &str)] = &[
    ("naive_pearl", "bel{f}", "direct combination on {f, nf}"),
    ("refined_tweety", "pl{fp}", "refined frame, upper bound for flying penguins"),
    ("two_step", "bel{b}", "product frame, then recombination"),
    ("two_step_tweety", "bel{fp}", "two-step on the refined frame"),
    ("cabbage", "bel{fp}", "penguin rule read as positive support"),
    ("partial_conditioning", "bel{fp}", "penguin rule restricted to penguins"),
];

fn slack(name: &str, text: &str) -> Result<Rational, String> {
    let r = parse_rational(text).map_err(|e| format!("{name}: {e}"))?;
    if r <= rat(0, 1) || r >= rat(1, 1) {
        return Err(format!("{name} must lie strictly between 0 and 1"));
    }
    Ok(r)
}

/// Belief that the penguin flies (or the analogous quantity) under each
/// method, exactly and as a float.
pub fn compare_methods(e1: &str, e2: &str) -> Result<String, String> {
    let mut params = Params::new();
    params.insert("e1".into(), ParamValue::Number(slack("e1", e1)?));
    params.insert("e2".into(), ParamValue::Number(slack("e2", e2)?));
    let mut rows = Vec::new();
    for &(scenario, quantity, method) in METHODS {
        let report = run_scenario(scenario, &params, Mode::Rational).map_err(|e| e.to_string())?;
        let value = report.value(quantity).map_err(|e| e.to_string())?;
        rows.push(Comparison {
            method,
            quantity,
            value: value.to_string(),
            approx: value.to_f64().unwrap_or(f64::NAN),
        });
    }
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Point {
    eps: f64,
    value: f64,
}

#[derive(Serialize)]
struct Curve {
    scenario: String,
    quantity: String,
    points: Vec<Point>,
    slope: f64,
    class: String,
}

/// `quantity` of `scenario` along `e1 = e2 = eps` for eps = 10^-1 down to
/// 10^-decades, with its fitted log-log slope.
pub fn order_curve(scenario: &str, quantity: &str, decades: u32) -> Result<String, String> {
    if !(3..=12).contains(&decades) {
        return Err("decades must be between 3 and 12".into());
    }
    let grid: Vec<Rational> = (1..=decades).map(|k| rat(1, 10i64.pow(k))).collect();
    let values = sweep(scenario, quantity, &grid, Mode::Float, &Params::new()).map_err(|e| e.to_string())?;
    let fit = epsilon_order(scenario, quantity, &grid, Mode::Float).map_err(|e| e.to_string())?;
    let points = values
        .iter()
        .zip(1..)
        .map(|((_, v), k)| Point {
            eps: 10f64.powi(-k),
            value: v.to_f64().unwrap_or(f64::NAN),
        })
        .collect();
    let curve = Curve {
        scenario: scenario.into(),
        quantity: quantity.into(),
        points,
        slope: fit.slope,
        class: fit.class.to_string(),
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

/// Parses and executes a scenario program, rendered in `format`
/// (`table`, `json` or `csv`). An empty `mode` picks the program default.
pub fn run_program(source: &str, mode: &str, format: &str) -> Result<String, String> {
    let mode = match mode {
        "" => None,
        m => Some(m.parse::<Mode>()?),
    };
    let format: Format = format.parse()?;
    let program = parse_program(source).map_err(|e| e.to_string())?;
    let reports = execute_program(&program, mode, &BTreeMap::new()).map_err(|e| e.to_string())?;
    Ok(render_reports(&reports, format))
}

#[wasm_bindgen(js_name = compareMethods)]
pub fn compare_methods_js(e1: &str, e2: &str) -> Result<String, JsValue> {
    compare_methods(e1, e2).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = orderCurve)]
pub fn order_curve_js(scenario: &str, quantity: &str, decades: u32) -> Result<String, JsValue> {
    order_curve(scenario, quantity, decades).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = runProgram)]
pub fn run_program_js(source: &str, mode: &str, format: &str) -> Result<String, JsValue> {
    run_program(source, mode, format).map_err(|e| JsValue::from_str(&e))
}
