//! Browser bindings for the locality audits.
//!
//! Each exported function returns a JSON string; the page in `www/` plots it.
//! The `*_json` functions hold the logic and are plain Rust so they can be
//! tested natively.

use lhv_audit_core::combinatorics::scan_table;
use lhv_audit_core::model::uncond_expectations;
use lhv_audit_core::signaling::{run_protocol, ChannelConfig};
use lhv_audit_core::{
    Direction, HpModel, HiddenSource, LhvModel, ModelParams, ThetaPolicy, Version,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct MarginalCurves {
    version: u8,
    n: u32,
    bob: Direction,
    /// Alice's setting angle in the x-y plane, degrees.
    angle: Vec<f64>,
    /// p₂(B = +1 | a, b, λ) for r(λ) = +1 and r(λ) = -1.
    cond_plus: Vec<f64>,
    cond_minus: Vec<f64>,
    /// p₂(B = +1 | a, b) with λ integrated out.
    uncond: Vec<f64>,
    /// p₁(A = +1 | a, b) with λ integrated out, at θ = 0 and θ = 1.
    alice_lower: Vec<f64>,
    alice_upper: Vec<f64>,
}

fn version(v: u8) -> Result<Version, String> {
    Version::from_number(v).map_err(|e| e.to_string())
}

pub fn marginal_curves_json(
    v: u8,
    n: u32,
    theta: f64,
    bob: [f64; 3],
    steps: usize,
) -> Result<String, String> {
    let version = version(v)?;
    let params = ModelParams::new(n, ThetaPolicy::Fixed(theta)).map_err(|e| e.to_string())?;
    let b = Direction::new(bob[0], bob[1], bob[2]).map_err(|e| e.to_string())?;
    if steps < 2 {
        return Err("need at least 2 steps".into());
    }
    let model = HpModel::new(version, params);
    let [plus, minus] = HiddenSource::both_signs();
    let mut out = MarginalCurves {
        version: v,
        n,
        bob: b,
        angle: Vec::with_capacity(steps),
        cond_plus: Vec::with_capacity(steps),
        cond_minus: Vec::with_capacity(steps),
        uncond: Vec::with_capacity(steps),
        alice_lower: Vec::with_capacity(steps),
        alice_upper: Vec::with_capacity(steps),
    };
    let err = |e: lhv_audit_core::Error| e.to_string();
    for k in 0..steps {
        let deg = 360.0 * k as f64 / (steps - 1) as f64;
        let a = Direction::planar(deg);
        out.angle.push(deg);
        out.cond_plus.push(model.cond_marginal_2(&a, &b, &plus).map_err(err)?.value.p_plus);
        out.cond_minus.push(model.cond_marginal_2(&a, &b, &minus).map_err(err)?.value.p_plus);
        out.uncond.push(model.uncond_marginal_2(&a, &b).map_err(err)?.value.p_plus);
        let alpha = uncond_expectations(version, &params, &a, &b).alpha;
        let clamp = |e: f64| (0.5 * (1.0 + e)).clamp(0.0, 1.0);
        out.alice_lower.push(clamp(alpha.at_theta(0.0)));
        out.alice_upper.push(clamp(alpha.at_theta(1.0)));
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SignalPoint {
    k: u32,
    empirical: f64,
    analytic: f64,
    standard_error: f64,
    mutual_information: f64,
}

pub fn signaling_curve_json(
    v: u8,
    k_max: u32,
    trials: u32,
    seed: u64,
    withhold_r: bool,
) -> Result<String, String> {
    let version = version(v)?;
    if k_max == 0 || k_max > 40 {
        return Err("k_max must lie in 1..=40".into());
    }
    let points = (1..=k_max)
        .map(|k| {
            let mut cfg = ChannelConfig::new(version, k, u64::from(trials), seed);
            cfg.disclose_r = !withhold_r;
            run_protocol(&cfg).map(|r| SignalPoint {
                k,
                empirical: r.empirical_error_rate,
                analytic: r.analytic_error_rate,
                standard_error: r.standard_error,
                mutual_information: r.mutual_information,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ScanPoint {
    n: u64,
    divisible: bool,
    prime: u64,
    needed: u64,
    available: u64,
}

pub fn divisibility_scan_json(limit: u32) -> Result<String, String> {
    if !(2..=20_000).contains(&limit) {
        return Err("limit must lie in 2..=20000".into());
    }
    let rows: Vec<ScanPoint> = scan_table(u64::from(limit))
        .iter()
        .map(|r| {
            let t = r.witness_prime.as_ref().or_else(|| r.tightest()).expect("nonempty");
            ScanPoint {
                n: r.n,
                divisible: r.binom_divisible,
                prime: t.p,
                needed: t.needed,
                available: t.available,
            }
        })
        .collect();
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

/// Station-2 outcome probabilities as Alice's setting sweeps the x-y plane.
#[wasm_bindgen]
pub fn marginal_curves(
    version: u8,
    n: u32,
    theta: f64,
    bx: f64,
    by: f64,
    bz: f64,
    steps: usize,
) -> Result<String, JsValue> {
    marginal_curves_json(version, n, theta, [bx, by, bz], steps).map_err(|e| JsValue::from_str(&e))
}

/// Empirical and analytic error rate of the repetition protocol for k = 1..=k_max.
#[wasm_bindgen]
pub fn signaling_curve(
    version: u8,
    k_max: u32,
    trials: u32,
    seed: u64,
    withhold_r: bool,
) -> Result<String, JsValue> {
    signaling_curve_json(version, k_max, trials, seed, withhold_r).map_err(|e| JsValue::from_str(&e))
}

/// Divisibility of C(9n², 3n) by 9n² for even n up to `limit`.
#[wasm_bindgen]
pub fn divisibility_scan(limit: u32) -> Result<String, JsValue> {
    divisibility_scan_json(limit).map_err(|e| JsValue::from_str(&e))
}
