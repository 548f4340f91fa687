//! Browser bindings: fiber plots, modulus brackets and sum-stability checks.

use regmod::exactnum::{ExtScalar, Scalar};
use regmod::mfn::builtin::PA_NAMES;
use regmod::mfn::{map_from_text, MapHandle};
use regmod::moduli::{estimate_modulus, Kind, Opts, Point, Window};
use regmod::theorems::{check_sum_stability, SumPoint};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_STEPS: usize = 2000;

fn scalar(name: &str, text: &str) -> Result<Scalar, String> {
    text.trim().parse().map_err(|e| format!("{name}: {e}"))
}

fn coords(text: &str) -> Result<Vec<Scalar>, String> {
    let t = text.trim().trim_start_matches('(').trim_end_matches(')');
    t.split(',').map(|c| scalar("point", c)).collect()
}

fn one_input(text: &str) -> Result<MapHandle, String> {
    let m = map_from_text(text).map_err(|e| e.to_string())?;
    if m.in_dim() != 1 {
        return Err(format!("{} has {} inputs; only one-input maps are supported here", m.label(), m.in_dim()));
    }
    Ok(m)
}

fn end(e: &ExtScalar) -> Value {
    match e {
        ExtScalar::Finite(s) => json!(s.to_f64()),
        _ => Value::Null,
    }
}

fn opts(budget: u32) -> Opts {
    Opts { budget: budget as usize, ..Opts::default() }
}

/// Library map names.
pub fn map_names() -> Value {
    let mut names: Vec<&str> = PA_NAMES.to_vec();
    names.push("rat_tail_seq");
    json!(names)
}

/// Fibers on an evenly spaced grid of `steps + 1` inputs in `[lo, hi]`.
pub fn fibers(map: &str, lo: &str, hi: &str, steps: usize) -> Result<Value, String> {
    let m = one_input(map)?;
    let (lo, hi) = (scalar("lo", lo)?, scalar("hi", hi)?);
    if lo >= hi {
        return Err("lo must be below hi".into());
    }
    let steps = steps.clamp(1, MAX_STEPS);
    let dx = &(&hi - &lo) * &Scalar::frac(1, steps as i64);
    let mut rows = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let x = &lo + &(&dx * &Scalar::int(i as i64));
        let f = m.fiber(std::slice::from_ref(&x));
        let cells: Vec<Value> = f
            .set
            .cells()
            .iter()
            .map(|c| json!({"lo": end(&c.lo), "hi": end(&c.hi), "lo_closed": c.lo_closed, "hi_closed": c.hi_closed}))
            .collect();
        let points: Vec<f64> = f.set.points().iter().map(Scalar::to_f64).collect();
        rows.push(json!({"x": x.to_f64(), "cells": cells, "points": points, "exact": f.exact}));
    }
    Ok(json!({"map": m.label(), "rows": rows}))
}

/// Bracket one modulus at `(x, y)`; an empty radius means the default window.
pub fn bracket(map: &str, point: &str, kind: &str, radius: &str, budget: u32) -> Result<Value, String> {
    let m = one_input(map)?;
    let c = coords(point)?;
    let [x, y] = <[Scalar; 2]>::try_from(c).map_err(|_| "point needs two coordinates x, y".to_string())?;
    let k: Kind = kind.parse()?;
    let w = match radius.trim() {
        "" => Window::default(),
        r => Window::uniform(scalar("radius", r)?),
    };
    let b = estimate_modulus(&m, &Point::new(x, y), k, &w, &opts(budget)).map_err(|e| e.to_string())?;
    Ok(json!({"text": b.to_string(), "bracket": b.to_json()}))
}

/// Sum-stability of `F` and `G` at `(x, y, z)` with tolerance `eps`.
pub fn sum_stability(f: &str, g: &str, point: &str, eps: &str, budget: u32) -> Result<Value, String> {
    let (f, g) = (one_input(f)?, one_input(g)?);
    let c = coords(point)?;
    let [x, y, z] = <[Scalar; 3]>::try_from(c).map_err(|_| "point needs three coordinates x, y, z".to_string())?;
    let eps = scalar("eps", eps)?;
    let cert = check_sum_stability(&f, &g, &SumPoint::new(x, y, z), &eps, &opts(budget)).map_err(|e| e.to_string())?;
    Ok(cert.to_json())
}

fn out(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = mapNames)]
pub fn map_names_js() -> String {
    map_names().to_string()
}

#[wasm_bindgen(js_name = fibers)]
pub fn fibers_js(map: &str, lo: &str, hi: &str, steps: usize) -> Result<String, JsError> {
    out(fibers(map, lo, hi, steps))
}

#[wasm_bindgen(js_name = bracket)]
pub fn bracket_js(map: &str, point: &str, kind: &str, radius: &str, budget: u32) -> Result<String, JsError> {
    out(bracket(map, point, kind, radius, budget))
}

#[wasm_bindgen(js_name = sumStability)]
pub fn sum_stability_js(f: &str, g: &str, point: &str, eps: &str, budget: u32) -> Result<String, JsError> {
    out(sum_stability(f, g, point, eps, budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_fibers_are_points() {
        let v = fibers("abs", "-1", "1", 4).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0]["points"], json!([1.0]));
        assert_eq!(rows[2]["points"], json!([0.0]));
    }

    #[test]
    fn linear_lop_bracket_is_exact() {
        let v = bracket("linear_2x", "0,0", "lop", "", 40).unwrap();
        assert!(v["text"].as_str().unwrap().contains("[2, 2]"), "{v}");
    }

    #[test]
    fn jump_pair_is_not_sum_stable() {
        let v = sum_stability("jump_two", "neg_jump_two", "1,2,-2", "1/2", 40).unwrap();
        assert_eq!(v["verdict"], json!("fails"));
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(fibers("nope", "0", "1", 2).is_err());
        assert!(fibers("abs", "1", "0", 2).is_err());
        assert!(bracket("abs", "0", "lop", "", 4).is_err());
        assert!(bracket("abs", "0,0", "wobble", "", 4).is_err());
        assert!(sum_stability("abs", "abs", "0,0", "1", 4).is_err());
    }
}
