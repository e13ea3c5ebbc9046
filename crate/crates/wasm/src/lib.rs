//! Browser bindings for the demo page in `www/`. Results come back as flat
//! `Float64Array`s to keep the JS side free of glue objects.

use std::f64::consts::PI;

use geophase::dephasing::{two_level_phase, TwoLevelDephasingParams};
use geophase::engine::TrajectoryGrid;
use geophase::qstate::BlochVector;
use geophase::spinbath::{spinbath_diagnostics, spinbath_phase, QuadratureConfig, SpinBathParams};
use geophase::Tolerances;
use wasm_bindgen::prelude::*;

const N_STEPS: usize = 64;
const THETA_MIN: f64 = 0.05;
const THETA_MAX: f64 = 0.95;
const MAX_POINTS: usize = 2048;

/// `[θ/π, Φ, visibility]` per point for θ in [0.05π, 0.95π]; failed points
/// are NaN.
pub fn phase_curve_values(gamma_over_omega: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}"));
    }
    let tol = Tolerances::default();
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let x = THETA_MIN + (THETA_MAX - THETA_MIN) * i as f64 / (points - 1) as f64;
        let r = TwoLevelDephasingParams::with_rate(1.0, x * PI, gamma_over_omega)
            .and_then(|p| two_level_phase(&p, N_STEPS, &tol));
        match r {
            Ok(r) => out.extend([x, r.phase, r.visibility]),
            Err(_) => out.extend([x, f64::NAN, f64::NAN]),
        }
    }
    Ok(out)
}

/// `[Φ, visibility]` of the dephasing qubit at one point.
pub fn dephasing_point_values(theta_pi: f64, gamma_over_omega: f64) -> Result<Vec<f64>, String> {
    let p = TwoLevelDephasingParams::with_rate(1.0, theta_pi * PI, gamma_over_omega)
        .map_err(|e| e.to_string())?;
    let r = two_level_phase(&p, N_STEPS, &Tolerances::default()).map_err(|e| e.to_string())?;
    Ok(vec![r.phase, r.visibility])
}

/// Bath-averaged Bloch vector over one period followed by the phase and
/// visibility: `[t, px, py, pz]` per step, then `[Φ, visibility]`.
pub fn spinbath_path_values(
    delta: f64,
    s_n: f64,
    p0: [f64; 3],
    steps: usize,
) -> Result<Vec<f64>, String> {
    if !(1..=MAX_POINTS).contains(&steps) {
        return Err(format!("steps must be in 1..={MAX_POINTS}"));
    }
    let params = SpinBathParams::new(delta, s_n, BlochVector::new(p0[0], p0[1], p0[2]))
        .map_err(|e| e.to_string())?;
    let quad = QuadratureConfig::default();
    let diag = spinbath_diagnostics(&params, &quad, steps).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(4 * (steps + 1) + 2);
    for (t, p) in diag.times.iter().zip(&diag.p) {
        out.extend([*t, p.px, p.py, p.pz]);
    }
    let grid = TrajectoryGrid::adaptive(params.horizon()).map_err(|e| e.to_string())?;
    match spinbath_phase(&params, &quad, &grid, &Tolerances::default()) {
        Ok(r) => out.extend([r.phase, r.visibility]),
        // an unpolarized state has no phase to report
        Err(_) => out.extend([f64::NAN, 0.0]),
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn phase_curve(gamma_over_omega: f64, points: usize) -> Result<Vec<f64>, JsError> {
    phase_curve_values(gamma_over_omega, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn dephasing_point(theta_pi: f64, gamma_over_omega: f64) -> Result<Vec<f64>, JsError> {
    dephasing_point_values(theta_pi, gamma_over_omega).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spinbath_path(
    delta: f64,
    s_n: f64,
    px0: f64,
    py0: f64,
    pz0: f64,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    spinbath_path_values(delta, s_n, [px0, py0, pz0], steps).map_err(|e| JsError::new(&e))
}
