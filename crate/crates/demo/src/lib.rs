//! Browser bindings. Each exported function returns a JSON string that the
//! page in `www/` plots; the plain-Rust versions are public for native use.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use waelab::constructions::{build_holder_approximator, build_sq, RegistryFunction, SupportKind, TargetFunction};
use waelab::intrinsic_dim::{default_eps_grid, minkowski_dim_estimate};

/// Points per plotted curve.
const PLOT_POINTS: usize = 401;

#[derive(Serialize)]
pub struct SqCurve {
    pub m: usize,
    pub xs: Vec<f64>,
    pub approx: Vec<f64>,
    pub exact: Vec<f64>,
    pub max_error: f64,
    /// `2^{-(2m+2)}`.
    pub bound: f64,
    pub weights: usize,
}

pub fn sq_curve(m: usize) -> Result<SqCurve, String> {
    let net = build_sq(m).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = (0..PLOT_POINTS).map(|i| i as f64 / (PLOT_POINTS - 1) as f64).collect();
    let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let approx: Vec<f64> = net
        .evaluate_batch(&inputs)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|y| y[0])
        .collect();
    let exact: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let max_error = approx
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SqCurve {
        m,
        xs,
        approx,
        exact,
        max_error,
        bound: 2f64.powi(-(2 * m as i32 + 2)),
        weights: net.count_stats().weights,
    })
}

#[derive(Serialize)]
pub struct HolderCurve {
    pub function: String,
    pub eta: f64,
    pub xs: Vec<f64>,
    pub approx: Vec<f64>,
    pub exact: Vec<f64>,
    pub max_error: f64,
    pub weights: usize,
    pub depth: usize,
    pub boxes: usize,
}

/// Approximates a one-dimensional registry function on `[0,1]` with
/// smoothness `β = 2`.
pub fn holder_curve(function: &str, eta: f64) -> Result<HolderCurve, String> {
    let f = RegistryFunction::by_name(function, 1).map_err(|e| e.to_string())?;
    let support = SupportKind::Segment.sample(1, 400, 7).map_err(|e| e.to_string())?;
    let approx = build_holder_approximator(&f, &support, 2.0, eta).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = (0..PLOT_POINTS).map(|i| i as f64 / (PLOT_POINTS - 1) as f64).collect();
    let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let values: Vec<f64> = approx
        .network
        .evaluate_batch(&inputs)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|y| y[0])
        .collect();
    let exact: Vec<f64> = inputs.iter().map(|x| f.value(x)).collect();
    let max_error = values
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(HolderCurve {
        function: function.to_string(),
        eta,
        xs,
        approx: values,
        exact,
        max_error,
        weights: approx.report.weights,
        depth: approx.report.depth,
        boxes: approx.report.extended_boxes,
    })
}

#[derive(Serialize)]
pub struct CoveringView {
    pub support: String,
    pub intrinsic_dim: usize,
    pub eps: Vec<f64>,
    pub counts: Vec<usize>,
    pub slope: f64,
}

/// Covering numbers and the fitted dimension of a sampled support in `[0,1]^3`.
pub fn covering_view(support: &str, n: usize, seed: u64) -> Result<CoveringView, String> {
    let kind: SupportKind = support.parse().map_err(|e: waelab::Error| e.to_string())?;
    let points = kind.sample(3, n, seed).map_err(|e| e.to_string())?;
    let est = minkowski_dim_estimate(&points, &default_eps_grid()).map_err(|e| e.to_string())?;
    Ok(CoveringView {
        support: support.to_string(),
        intrinsic_dim: kind.intrinsic_dim(3),
        eps: est.curve.entries.iter().map(|e| e.0).collect(),
        counts: est.curve.entries.iter().map(|e| e.1).collect(),
        slope: est.slope,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = sqCurve)]
pub fn sq_curve_js(m: usize) -> Result<String, JsValue> {
    to_js(sq_curve(m))
}

#[wasm_bindgen(js_name = holderCurve)]
pub fn holder_curve_js(function: &str, eta: f64) -> Result<String, JsValue> {
    to_js(holder_curve(function, eta))
}

#[wasm_bindgen(js_name = coveringView)]
pub fn covering_view_js(support: &str, n: usize, seed: u64) -> Result<String, JsValue> {
    to_js(covering_view(support, n, seed))
}
