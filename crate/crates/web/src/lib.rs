//! Browser bindings for the interactive demo in `www/`.
//!
//! Every export takes plain strings and numbers and returns a JSON document;
//! errors surface as JavaScript exceptions carrying the message.

use serde::Serialize;
use tunable_ht::explab::nu_grid;
use tunable_ht::{
    bayes_exponent_trace, loss_curve, np_exponent_trace, sweep_d_b_nu, Distribution,
    HypothesisPair, NuParam, Prior, TypeIIReading,
};
use wasm_bindgen::prelude::*;

/// Largest sequence length the page may request.
pub const MAX_N: u32 = 1000;

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| format!("cannot parse {what} entry '{x}'")))
        .collect()
}

fn parse_nu(s: &str) -> Result<NuParam, String> {
    s.parse().map_err(|e: tunable_ht::Error| e.to_string())
}

fn pair(p0: &str, p1: &str) -> Result<HypothesisPair, String> {
    let d = |s: &str, name| {
        Distribution::from_weights(&parse_list::<f64>(s, name)?).map_err(|e| e.to_string())
    };
    HypothesisPair::new(d(p0, "p0")?, d(p1, "p1")?).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Series {
    label: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// ν-loss curves, one series per entry of the comma-separated `nus`.
pub fn loss_curves(nus: &str, steps: usize) -> Result<String, String> {
    let nus = nus.split(',').map(str::trim).map(parse_nu).collect::<Result<Vec<_>, _>>()?;
    let points = loss_curve(&nus, steps).map_err(|e| e.to_string())?;
    let series: Vec<Series> = points
        .chunks(steps)
        .map(|c| Series {
            label: format!("ν = {}", c[0].nu),
            x: c.iter().map(|p| p.p).collect(),
            y: c.iter().map(|p| p.loss).collect(),
        })
        .collect();
    to_json(&series)
}

/// `D_B,ν` in bits across `[nu_min, nu_max]`.
pub fn d_b_sweep(p0: &str, p1: &str, nu_min: f64, nu_max: f64, steps: usize) -> Result<String, String> {
    let pair = pair(p0, p1)?;
    let grid = nu_grid(nu_min, nu_max, steps).map_err(|e| e.to_string())?;
    let pts = sweep_d_b_nu(&pair, &grid).map_err(|e| e.to_string())?;
    to_json(&Series {
        label: "D_B,ν".into(),
        x: pts.iter().map(|p| p.nu).collect(),
        y: pts.iter().map(|p| p.value).collect(),
    })
}

#[derive(Serialize)]
struct TraceView {
    estimate: Series,
    references: Vec<(String, f64)>,
}

/// Exponent trace for `n = step, 2·step, ..., n_max`. `kind` is `"np"`
/// (size `epsilon`) or `"bayes"` (prior `(pi0, 1 - pi0)`).
#[allow(clippy::too_many_arguments)]
pub fn exponent_trace(
    kind: &str,
    p0: &str,
    p1: &str,
    nu: &str,
    epsilon: f64,
    pi0: f64,
    n_max: u32,
    step: u32,
) -> Result<String, String> {
    if step == 0 || n_max < step || n_max > MAX_N {
        return Err(format!("need 1 <= step <= n_max <= {MAX_N}"));
    }
    let nu = parse_nu(nu)?;
    let ns: Vec<u32> = (1..=n_max / step).map(|i| i * step).collect();
    let pair = pair(p0, p1)?;
    let trace = match kind {
        "np" => np_exponent_trace(nu, epsilon, &pair, &ns, TypeIIReading::Nu),
        "bayes" => {
            let prior = Prior::new(pi0, 1.0 - pi0).map_err(|e| e.to_string())?;
            bayes_exponent_trace(nu, &pair.with_prior(prior), &ns)
        }
        other => return Err(format!("unknown trace kind '{other}'")),
    }
    .map_err(|e| e.to_string())?;
    to_json(&TraceView {
        estimate: Series {
            label: format!("ν = {nu}"),
            x: trace.rows.iter().map(|r| f64::from(r.n)).collect(),
            y: trace.rows.iter().map(|r| r.exponent_estimate).collect(),
        },
        references: trace.references.iter().map(|r| (r.name.clone(), r.value)).collect(),
    })
}

#[wasm_bindgen(js_name = lossCurves)]
pub fn loss_curves_js(nus: &str, steps: usize) -> Result<String, JsError> {
    loss_curves(nus, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dbSweep)]
pub fn d_b_sweep_js(p0: &str, p1: &str, nu_min: f64, nu_max: f64, steps: usize) -> Result<String, JsError> {
    d_b_sweep(p0, p1, nu_min, nu_max, steps).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = exponentTrace)]
pub fn exponent_trace_js(
    kind: &str,
    p0: &str,
    p1: &str,
    nu: &str,
    epsilon: f64,
    pi0: f64,
    n_max: u32,
    step: u32,
) -> Result<String, JsError> {
    exponent_trace(kind, p0, p1, nu, epsilon, pi0, n_max, step).map_err(|e| JsError::new(&e))
}
