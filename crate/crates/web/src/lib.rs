//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string; errors come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use laserlab::experiments::{run_molmer, MolmerParams};
use laserlab::fock::{phase_average, poisson_number_mixture, state_metrics};
use laserlab::gaussian::bk_teleport_fidelity_phased;
use num_complex::Complex64 as C64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_json<T: Serialize>(r: laserlab::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[derive(Serialize)]
struct Aliasing {
    mag: f64,
    dim: usize,
    /// `(grid points, trace distance to the Poisson mixture)`.
    curve: Vec<(usize, f64)>,
    /// `|ρ_mn|` of the grid average at the requested grid size.
    density: Vec<Vec<f64>>,
    grid: usize,
    trace_distance: f64,
}

fn aliasing(mag: f64, dim: usize, grid: usize) -> laserlab::Result<Aliasing> {
    let poisson = poisson_number_mixture(mag, dim)?;
    let mut curve = Vec::with_capacity(2 * dim);
    for m in 1..=2 * dim {
        let d = state_metrics(&phase_average(mag, dim, m)?, &poisson)?.trace_distance;
        curve.push((m, d));
    }
    let avg = phase_average(mag, dim, grid)?;
    let density = (0..dim).map(|i| (0..dim).map(|j| avg.entry(i, j).norm()).collect()).collect();
    let trace_distance = state_metrics(&avg, &poisson)?.trace_distance;
    Ok(Aliasing { mag, dim, curve, density, grid, trace_distance })
}

/// Phase-averaged coherent state versus the Poisson number mixture.
#[wasm_bindgen]
pub fn identity_explorer(mag: f64, dim: usize, grid: usize) -> String {
    if dim > 40 {
        return error_json("dimension capped at 40 in the browser");
    }
    to_json(aliasing(mag, dim, grid))
}

#[derive(Serialize)]
struct Collapse {
    /// `(detections, median R, trials still running)`.
    median: Vec<(usize, f64, usize)>,
    /// `R` after each detection for the first few trials.
    examples: Vec<Vec<f64>>,
    mean_detections: f64,
}

/// Relative-phase collapse between two phase-randomized packets.
#[wasm_bindgen]
pub fn molmer_collapse(mag_a: f64, mag_b: f64, packets: usize, trials: usize, seed: u64) -> String {
    if trials > 2000 {
        return error_json("at most 2000 trials in the browser");
    }
    let params = MolmerParams { mag_a, mag_b, n_packets: packets, trials, thresholds: vec![], ..Default::default() };
    to_json(run_molmer(&params, seed).map(|out| {
        let max = out.r_traces.iter().map(Vec::len).max().unwrap_or(0);
        let median = (1..=max)
            .map(|k| {
                let (r, n) = out.median_r_after(k);
                (k, r, n)
            })
            .collect();
        let examples = out.r_traces.iter().take(5).cloned().collect();
        Collapse { median, examples, mean_detections: out.mean_detections() }
    }))
}

#[derive(Serialize)]
struct TeleportCurve {
    /// `(r, shared reference, reference offset by delta)`.
    points: Vec<(f64, f64, f64)>,
    classical: f64,
}

/// Predicted teleportation fidelity against squeezing for a coherent input.
#[wasm_bindgen]
pub fn teleport_curve(beta_re: f64, beta_im: f64, gain: f64, delta: f64, r_max: f64, steps: usize) -> String {
    let beta = C64::new(beta_re, beta_im);
    let steps = steps.clamp(2, 400);
    let result = (0..steps)
        .map(|k| {
            let r = r_max * k as f64 / (steps - 1) as f64;
            Ok((
                r,
                bk_teleport_fidelity_phased(r, gain, 0.0, beta)?,
                bk_teleport_fidelity_phased(r, gain, delta, beta)?,
            ))
        })
        .collect::<laserlab::Result<Vec<_>>>()
        .map(|points| TeleportCurve { points, classical: 0.5 });
    to_json(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliasing_curve_reaches_zero() {
        let v: serde_json::Value = serde_json::from_str(&identity_explorer(1.0, 12, 3)).unwrap();
        let curve = v["curve"].as_array().unwrap();
        assert_eq!(curve.len(), 24);
        assert!(curve.last().unwrap()[1].as_f64().unwrap() < 1e-12);
        assert!(v["trace_distance"].as_f64().unwrap() > 1e-3);
    }

    #[test]
    fn collapse_is_reproducible() {
        let a = molmer_collapse(1.0, 1.0, 10, 50, 7);
        assert_eq!(a, molmer_collapse(1.0, 1.0, 10, 50, 7));
        assert!(!a.contains("error"));
    }

    #[test]
    fn teleport_curve_endpoints() {
        let v: serde_json::Value =
            serde_json::from_str(&teleport_curve(1.0, 0.0, 1.0, 0.0, 4f64.ln() / 2.0, 2)).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert!((pts[0][1].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((pts[1][1].as_f64().unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn errors_are_json() {
        let v: serde_json::Value = serde_json::from_str(&identity_explorer(-1.0, 10, 5)).unwrap();
        assert!(v["error"].is_string());
    }
}
