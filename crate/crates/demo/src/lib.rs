//! Browser bindings: march a surface for the mesh view, sample the two
//! radial profiles, and run a round trip of the height function.
//!
//! Each operation is a plain Rust function with a thin `wasm_bindgen`
//! wrapper, so the logic is testable natively.

use conelike::analysis::round_trip;
use conelike::radial::{integrate_pos_quarter, neg_quarter_profile};
use conelike::{march, NullCurveSpec, PrescribedCurvature, SolverConfig};
use wasm_bindgen::prelude::*;

/// Rows of the mesh returned to the page are thinned to at most this many.
pub const MAX_ROWS: usize = 60;

fn config(n: usize, v_max: f64) -> Result<SolverConfig, String> {
    let cfg = SolverConfig {
        n,
        v_max,
        dv: 1e-3_f64.max(v_max / 2000.0),
        ..SolverConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// `[rows, n, x0, y0, z0, x1, ...]` for `A(u) = a0 + a1 cos u`, `H = 1`,
/// with at most [`MAX_ROWS`] evenly spaced rows.
pub fn surface_mesh(a0: f64, a1: f64, n: usize, v_max: f64) -> Result<Vec<f64>, String> {
    let cfg = config(n, v_max)?;
    let spec = NullCurveSpec::from_series(n, a0, &[a1], &[]).map_err(|e| e.to_string())?;
    let patch = march(&spec, &PrescribedCurvature::unit(), &cfg).map_err(|e| e.to_string())?;
    let stride = patch.rows().div_ceil(MAX_ROWS);
    let picked: Vec<usize> = (0..patch.rows()).step_by(stride).collect();
    let mut out = Vec::with_capacity(2 + 3 * n * picked.len());
    out.push(picked.len() as f64);
    out.push(n as f64);
    for k in picked {
        for p in &patch.psi()[k] {
            out.extend([p.x, p.y, p.z]);
        }
    }
    Ok(out)
}

/// `[v, f, h]` triples for `A = -1/4` (closed form) followed by the same
/// count for `A = +1/4` (integrated).
pub fn radial_profiles(v_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 8 {
        return Err("need at least 8 samples".into());
    }
    let dv = v_max / (samples - 1) as f64;
    let neg = neg_quarter_profile(v_max, dv).map_err(|e| e.to_string())?;
    let pos = integrate_pos_quarter(v_max, dv).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(6 * samples);
    for p in [&neg, &pos] {
        for k in 0..p.len() {
            out.extend([p.v[k], p.f[k], p.h[k]]);
        }
    }
    Ok(out)
}

/// Sup error of the recovered canonical height function.
pub fn round_trip_error(a0: f64, a1: f64, n: usize, v_max: f64) -> Result<f64, String> {
    let cfg = config(n, v_max)?;
    let spec = NullCurveSpec::from_series(n, a0, &[a1], &[]).map_err(|e| e.to_string())?;
    round_trip(spec.height(), &PrescribedCurvature::unit(), &cfg).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = surfaceMesh)]
pub fn surface_mesh_js(a0: f64, a1: f64, n: usize, v_max: f64) -> Result<Vec<f64>, JsError> {
    surface_mesh(a0, a1, n, v_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = radialProfiles)]
pub fn radial_profiles_js(v_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    radial_profiles(v_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = roundTrip)]
pub fn round_trip_js(a0: f64, a1: f64, n: usize, v_max: f64) -> Result<f64, JsError> {
    round_trip_error(a0, a1, n, v_max).map_err(|e| JsError::new(&e))
}
