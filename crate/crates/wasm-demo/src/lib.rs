//! wasm-bindgen exports for `www/index.html`. Each export returns a JSON
//! string; the `*_json` functions behind them are plain Rust and tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use weingarten::integrator::{integrate_cm, StepControl};
use weingarten::mobius::{decompose, induced_surface, transform_relation, Branch, CalibrationChoice, MoebiusElement};
use weingarten::relations::parse_relation;
use weingarten::roc_core::{cm_residual, embed_profile, RoCProfile};
use weingarten::semiquadratic::classify;

/// Samples sent to the page; plots do not need the full 2048-interval grid.
const PLOT_INTERVALS: usize = 400;

fn err(e: weingarten::Error) -> String {
    e.to_string()
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn profile_json(p: &RoCProfile, rho: &[f64], h: &[f64]) -> Value {
    let col = |v: Vec<f64>| v.into_iter().map(finite_or_null).collect::<Vec<_>>();
    json!({
        "theta": p.grid,
        "r1": col(p.r1()),
        "r2": col(p.r2()),
        "rho": col(rho.to_vec()),
        "h": col(h.to_vec()),
        "cm_residual": cm_residual(p).ok().map(|r| r.max_abs()),
    })
}

fn run(relation: &str, r1: f64, a: f64, b: f64) -> Result<(weingarten::relations::WeingartenRelation, RoCProfile), String> {
    let rel = parse_relation(relation).map_err(err)?;
    let ctrl = StepControl { intervals: PLOT_INTERVALS, ..Default::default() };
    let theta0 = std::f64::consts::FRAC_PI_2.clamp(a, b);
    let run = integrate_cm(&rel, theta0, r1, (a, b), &ctrl).map_err(err)?;
    Ok((rel, run.profile))
}

fn embedded(p: &RoCProfile) -> (Vec<f64>, Vec<f64>) {
    match embed_profile(p, 0.0) {
        Ok(e) => (e.rho, e.h),
        Err(_) => (vec![f64::NAN; p.len()], vec![f64::NAN; p.len()]),
    }
}

/// Integrates from θ₀ = π/2 (clamped into [a, b]) with r₁(θ₀) = `r1`.
pub fn integrate_json(relation: &str, r1: f64, a: f64, b: f64) -> Result<String, String> {
    let (rel, p) = run(relation, r1, a, b)?;
    let (rho, h) = embedded(&p);
    let mut out = profile_json(&p, &rho, &h);
    out["relation"] = json!(rel.render());
    Ok(out.to_string())
}

/// Integrates as above, then applies [[a, b], [c, d]] with automatic calibration.
pub fn transform_json(relation: &str, r1: f64, lo: f64, hi: f64, m: [f64; 4]) -> Result<String, String> {
    let (rel, p) = run(relation, r1, lo, hi)?;
    let el = MoebiusElement::strict(m[0], m[1], m[2], m[3]).map_err(err)?;
    let (_, src_h) = embedded(&p);
    let src_h = src_h.iter().all(|x| x.is_finite()).then_some(src_h.as_slice());
    let s = induced_surface(&el, &p, src_h, CalibrationChoice::Auto, Branch::Standard).map_err(err)?;
    let mut out = match (&s.profile, &s.curve) {
        (Some(q), Some(c)) => profile_json(q, &c.rho, &c.h),
        (Some(q), None) => profile_json(q, &vec![f64::NAN; q.len()], &vec![f64::NAN; q.len()]),
        _ => json!({}),
    };
    let image = transform_relation(&el, &rel).map(|r| r.render()).ok();
    out["kind"] = serde_json::to_value(s.kind).unwrap();
    out["factors"] = json!(decompose(&el).to_string());
    out["calibration"] = finite_or_null(s.calibration);
    out["relation"] = json!(image);
    let (rho, h) = embedded(&p);
    out["source"] = profile_json(&p, &rho, &h);
    Ok(out.to_string())
}

pub fn classify_json(relation: &str) -> Result<String, String> {
    let rel = parse_relation(relation).map_err(err)?;
    let c = classify(&rel).map_err(err)?;
    let mut v = serde_json::to_value(&c).unwrap();
    v["render"] = json!(rel.render());
    Ok(v.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn integrate(relation: &str, r1: f64, a: f64, b: f64) -> Result<String, JsError> {
    js(integrate_json(relation, r1, a, b))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn transform(relation: &str, r1: f64, lo: f64, hi: f64, a: f64, b: f64, c: f64, d: f64) -> Result<String, JsError> {
    js(transform_json(relation, r1, lo, hi, [a, b, c, d]))
}

#[wasm_bindgen(js_name = classifyRelation)]
pub fn classify_relation(relation: &str) -> Result<String, JsError> {
    js(classify_json(relation))
}
