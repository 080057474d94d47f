//! Browser demo. Three operations on the three preparation targets:
//! the Husimi distribution of a single-node state, its ideal Ramsey trace,
//! and the clock-interferometer signal with its visibility.
//!
//! Each export wraps a plain function that native tests call directly.
//! Ramsey times are in the dimensionless `x = m_eg Δφ T / ħ`.

use std::f64::consts::PI;

use dickenet_core::dicke::{husimi_q, mass_distribution, DickeState, EnsembleDims};
use dickenet_core::gravity::{aci_interference, aci_visibility, AciParams, GravityContext};
use dickenet_core::measurement::signal_nonlocal_analytic;
use dickenet_core::varprep;
use wasm_bindgen::prelude::*;

/// Largest ensemble the page offers; keeps the Husimi grid interactive.
pub const MAX_ATOMS: usize = 60;

pub fn target_state(atoms: usize, target: &str, m1: usize, m2: usize) -> Result<DickeState, String> {
    if atoms > MAX_ATOMS {
        return Err(format!("N = {atoms} exceeds the demo limit {MAX_ATOMS}"));
    }
    let d = EnsembleDims::new(atoms).map_err(|e| e.to_string())?;
    match target {
        "eigenstate" => varprep::mass_eigenstate(d, m1),
        "clock" => varprep::clock(d, m1, m2),
        "coherent" => Ok(varprep::coherent(d)),
        other => return Err(format!("unknown target `{other}`")),
    }
    .map_err(|e| e.to_string())
}

/// `Q(θ, φ)` on `resolution` polar rows by `2·resolution` azimuth columns,
/// row-major, cell centres.
pub fn husimi_grid(state: &DickeState, resolution: usize) -> Vec<f64> {
    let cols = 2 * resolution;
    let grid: Vec<(f64, f64)> = (0..resolution)
        .flat_map(|i| {
            let polar = PI * (i as f64 + 0.5) / resolution as f64;
            (0..cols).map(move |j| (polar, 2.0 * PI * (j as f64 + 0.5) / cols as f64))
        })
        .collect();
    husimi_q(state, &grid)
}

fn unit_context() -> GravityContext {
    GravityContext::new(1.0, 1.0, 1.0)
        .and_then(|c| c.with_constants(1.0, 1.0))
        .expect("unit constants are valid")
}

/// Ideal nonlocal-parity trace of `target` for `x ∈ [0, x_max]`. The
/// vacuum weight is dropped because the preparation keeps `|0⟩` fixed.
pub fn ideal_trace(state: &DickeState, x_max: f64, steps: usize, phi0: f64) -> Result<Vec<f64>, String> {
    if steps < 2 || !(x_max > 0.0 && x_max.is_finite()) {
        return Err("need x_max > 0 and at least two steps".into());
    }
    let mut w = mass_distribution(state);
    w[0] = 0.0;
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err("target has no excited component".into());
    }
    w.iter_mut().for_each(|p| *p /= total);
    let ctx = unit_context();
    Ok((0..steps)
        .map(|k| signal_nonlocal_analytic(&w, &ctx, phi0, x_max * k as f64 / (steps - 1) as f64))
        .collect())
}

/// Clock-interferometer signal followed by its windowed visibility, both of
/// length `steps`, in units where `δΩ = lower` and `δω = upper − lower`.
pub fn clock_interferometer(lower: usize, upper: usize, t_max: f64, steps: usize, window: f64) -> Result<Vec<f64>, String> {
    if steps < 2 || !(t_max > 0.0 && t_max.is_finite()) {
        return Err("need t_max > 0 and at least two steps".into());
    }
    let ctx = unit_context().with_potentials(0.0, 1.0).map_err(|e| e.to_string())?;
    let aci = AciParams::from_levels(&ctx, upper, lower).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..steps).map(|k| t_max * k as f64 / (steps - 1) as f64).collect();
    let trace = aci_interference(&aci, &ctx, &times);
    let visibility = aci_visibility(&trace, window).map_err(|e| e.to_string())?;
    Ok(trace.signal().iter().copied().chain(visibility).collect())
}

#[wasm_bindgen]
pub fn husimi(atoms: usize, target: &str, m1: usize, m2: usize, resolution: usize) -> Result<Vec<f64>, JsError> {
    let state = target_state(atoms, target, m1, m2).map_err(|e| JsError::new(&e))?;
    Ok(husimi_grid(&state, resolution.clamp(4, 128)))
}

#[wasm_bindgen]
pub fn ramsey_trace(atoms: usize, target: &str, m1: usize, m2: usize, x_max: f64, steps: usize, phi0: f64) -> Result<Vec<f64>, JsError> {
    let state = target_state(atoms, target, m1, m2).map_err(|e| JsError::new(&e))?;
    ideal_trace(&state, x_max, steps, phi0).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn aci_trace(lower: usize, upper: usize, t_max: f64, steps: usize, window: f64) -> Result<Vec<f64>, JsError> {
    clock_interferometer(lower, upper, t_max, steps, window).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_husimi_peaks_at_its_direction() {
        let state = target_state(20, "coherent", 0, 0).unwrap();
        let q = husimi_grid(&state, 16);
        let (best, _) = q.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        // R_y(π/2)|0⟩ points along the equator
        let row = best / 32;
        assert!(row == 7 || row == 8, "{row}");
        assert!(q.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn eigenstate_trace_is_a_cosine() {
        let state = target_state(20, "eigenstate", 6, 0).unwrap();
        let trace = ideal_trace(&state, 5.0, 51, 0.0).unwrap();
        for (k, v) in trace.iter().enumerate() {
            assert!((v - (6.0 * 0.1 * k as f64).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn clock_trace_beats() {
        let state = target_state(20, "clock", 4, 8).unwrap();
        let trace = ideal_trace(&state, PI / 2.0, 3, 0.0).unwrap();
        // ½[cos 4x + cos 8x] at x = π/4 and π/2
        assert!((trace[1] - 0.5 * ((PI).cos() + (2.0 * PI).cos())).abs() < 1e-12);
        assert!((trace[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interferometer_revives() {
        let out = clock_interferometer(20, 21, 2.0 * PI, 2001, 1.0).unwrap();
        let visibility = &out[2001..];
        assert!(visibility[1000] < 0.2 && visibility[2000] > 0.9);
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(target_state(20, "noon", 1, 2).is_err());
        assert!(target_state(20, "clock", 8, 4).is_err());
        assert!(target_state(MAX_ATOMS + 1, "coherent", 0, 0).is_err());
        assert!(clock_interferometer(5, 4, 1.0, 10, 0.5).is_err());
        assert!(ideal_trace(&target_state(4, "coherent", 0, 0).unwrap(), 0.0, 10, 0.0).is_err());
    }
}
