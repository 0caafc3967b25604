//! WebAssembly bindings for the browser demo.
//!
//! The plain functions hold the logic and are tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors into JavaScript exceptions.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use adlbr::field::{Grid, ScalarField, TensorField};
use adlbr::operator::{assemble, cg_solve_with, CgOptions, Scheme};
use adlbr::stencil::{
    adlbr_stencil_2d, ann_stencil_2d, decomposition_residual, stencil_radius, symbol, symbol_max, Stencil,
};
use adlbr::synthetic::{error_norms, make_inputs, reference_solution, SyntheticCase};
use adlbr::tensor::{diffusion_tensor, DiffusionKind, StructureParams};
use adlbr::SymMat2;

/// Largest accepted image side, to keep the page responsive.
pub const MAX_SIDE: usize = 256;

fn stencil_for(kappa: f64, theta: f64, scheme: &str) -> Result<(SymMat2, Stencil), String> {
    if !(kappa >= 1.0 && kappa.is_finite() && theta.is_finite()) {
        return Err(format!("kappa = {kappa} must be >= 1"));
    }
    let d = SymMat2::rotated_anisotropic(kappa, theta);
    let s = match scheme.parse::<Scheme>().map_err(|e| e.to_string())? {
        Scheme::AdLbr => adlbr_stencil_2d(&d),
        Scheme::Ann => ann_stencil_2d(&d),
        Scheme::Fd => return Err("finite differences have no cell stencil".into()),
    }
    .map_err(|e| e.to_string())?;
    Ok((d, s))
}

/// Stencil of `R(theta) diag(1, kappa^-2) R(theta)^T` as a JSON object.
pub fn stencil_report(kappa: f64, theta: f64, scheme: &str) -> Result<Value, String> {
    let (d, s) = stencil_for(kappa, theta, scheme)?;
    let entries: Vec<Value> = s
        .half()
        .filter(|e| e.weight > 0.0)
        .map(|e| json!({ "offset": [e.offset[0], e.offset[1]], "weight": e.weight, "coefficient": e.operator_coefficient() }))
        .collect();
    Ok(json!({
        "tensor": [[d.xx, d.xy], [d.xy, d.yy]],
        "entries": entries,
        "center": s.center_coefficient(),
        "radius": stencil_radius(&s).map_err(|e| e.to_string())?,
        "cardinality": s.cardinality(),
        "residual": decomposition_residual(&s, &d),
        "symbol_max": symbol_max(&s),
    }))
}

/// Fourier symbol on a `res x res` grid of frequencies covering `[-pi, pi)^2`,
/// row-major with the vertical frequency along rows.
pub fn symbol_grid(kappa: f64, theta: f64, scheme: &str, res: usize) -> Result<Vec<f64>, String> {
    if !(2..=1024).contains(&res) {
        return Err(format!("resolution {res} must lie in 2..=1024"));
    }
    let (_, s) = stencil_for(kappa, theta, scheme)?;
    let freq = |k: usize| -PI + 2.0 * PI * k as f64 / res as f64;
    Ok((0..res * res).map(|i| symbol(&s, [freq(i % res), freq(i / res), 0.0])).collect())
}

fn demo_case(n: usize, kappa: f64) -> Result<SyntheticCase, String> {
    if n > MAX_SIDE {
        return Err(format!("image side {n} exceeds {MAX_SIDE}"));
    }
    SyntheticCase::new(kappa, n).map_err(|e| e.to_string())
}

/// The transported stripe image at `n x n` plus Gaussian noise.
pub fn noisy_stripes(n: usize, kappa: f64, noise_sd: f64, seed: u64) -> Result<Vec<f64>, String> {
    let c = demo_case(n, kappa)?;
    let noise = Normal::new(0.0, noise_sd).map_err(|_| format!("noise level {noise_sd} must be >= 0"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (v, _) = make_inputs(&c).map_err(|e| e.to_string())?;
    Ok(v.data().iter().map(|x| x + noise.sample(&mut rng)).collect())
}

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Restoration {
    pixels: Vec<f64>,
    /// Conjugate gradient iterations.
    pub iterations: usize,
    /// Relative L2 distance to the closed-form smoothed stripe.
    pub error: f64,
}

#[wasm_bindgen]
impl Restoration {
    pub fn pixels(&self) -> Vec<f64> {
        self.pixels.clone()
    }
}

/// Solves `(I + lambda A) u = v` for an `n x n` image, with the exact stripe
/// tensor (`"exact"`) or the CED map of the image itself (`"ced"`).
pub fn restore_image(
    pixels: &[f64],
    n: usize,
    kappa: f64,
    lambda: f64,
    scheme: &str,
    tensor: &str,
) -> Result<Restoration, String> {
    let c = demo_case(n, kappa)?;
    let scheme: Scheme = scheme.parse().map_err(|e: adlbr::Error| e.to_string())?;
    let v = ScalarField::new(c.grid(), pixels.to_vec()).map_err(|e| e.to_string())?;
    let t: TensorField = match tensor {
        "exact" => make_inputs(&c).map_err(|e| e.to_string())?.1,
        "ced" => {
            // structure scales are in cells, so work on a unit-spacing copy
            let unit = Grid::square(n, 1.0, v.grid().boundary()).map_err(|e| e.to_string())?;
            let u1 = ScalarField::new(unit, pixels.to_vec()).map_err(|e| e.to_string())?;
            let params = StructureParams { sigma: 1.0, rho: 4.0, contrast: 1e-4, alpha: 1e-2 };
            let t = diffusion_tensor(&u1, &params, DiffusionKind::Ced).map_err(|e| e.to_string())?;
            TensorField::new(*v.grid(), t.into_data()).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown tensor source {other:?}; expected exact or ced")),
    };
    let a = assemble(&t, scheme).map_err(|e| e.to_string())?;
    let report =
        cg_solve_with(&a, lambda, &v, &CgOptions { tol: 1e-8, ..CgOptions::default() }).map_err(|e| e.to_string())?;
    let reference = reference_solution(&SyntheticCase { lambda, ..c }).map_err(|e| e.to_string())?;
    let (error, _) = error_norms(&report.solution, &reference).map_err(|e| e.to_string())?;
    Ok(Restoration { pixels: report.solution.into_data(), iterations: report.iterations, error })
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = stencil)]
pub fn stencil_js(kappa: f64, theta: f64, scheme: &str) -> Result<String, JsError> {
    stencil_report(kappa, theta, scheme).map(|v| v.to_string()).map_err(js)
}

#[wasm_bindgen(js_name = symbolGrid)]
pub fn symbol_grid_js(kappa: f64, theta: f64, scheme: &str, res: usize) -> Result<Vec<f64>, JsError> {
    symbol_grid(kappa, theta, scheme, res).map_err(js)
}

#[wasm_bindgen(js_name = noisyStripes)]
pub fn noisy_stripes_js(n: usize, kappa: f64, noise_sd: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    noisy_stripes(n, kappa, noise_sd, seed as u64).map_err(js)
}

#[wasm_bindgen(js_name = restore)]
pub fn restore_js(
    pixels: &[f64],
    n: usize,
    kappa: f64,
    lambda: f64,
    scheme: &str,
    tensor: &str,
) -> Result<Restoration, JsError> {
    restore_image(pixels, n, kappa, lambda, scheme, tensor).map_err(js)
}
