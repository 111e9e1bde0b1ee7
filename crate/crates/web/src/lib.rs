//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every function takes constructor strings, as in scenario configs, and
//! returns JSON. Errors come back as strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use maslov_core::ambient::AmbientManifold;
use maslov_core::canonical::{generator_loop_winding, relative_phase_trace, winding_number};
use maslov_core::lagrangian::LagrangianImmersion;
use maslov_core::surface::BoundedSurface;
use maslov_core::verify::{identity_residual, Tolerances};

const MAX_RESOLUTION: u32 = 256;
const MAX_SAMPLES: u32 = 4096;

fn build(
    manifold: &str,
    lagrangian: &str,
    surface: &str,
) -> Result<(AmbientManifold, LagrangianImmersion, BoundedSurface), String> {
    let m: AmbientManifold = manifold.parse().map_err(|e: maslov_core::Error| e.to_string())?;
    let l = LagrangianImmersion::parse(lagrangian, &m).map_err(|e| e.to_string())?;
    let f = BoundedSurface::parse(surface, &m, &l).map_err(|e| e.to_string())?;
    Ok((m, l, f))
}

/// Verification report for one surface as JSON.
#[wasm_bindgen]
pub fn verify_scenario(manifold: &str, lagrangian: &str, surface: &str, resolution: u32) -> Result<String, String> {
    if !resolution.is_power_of_two() || !(8..=MAX_RESOLUTION).contains(&resolution) {
        return Err(format!("resolution must be a power of two in [8, {MAX_RESOLUTION}]"));
    }
    let (m, l, f) = build(manifold, lagrangian, surface)?;
    let f = f.with_grid(resolution as usize, 8).map_err(|e| e.to_string())?;
    let report = identity_residual("demo", &m, &l, &f, &Tolerances::default()).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct BoundaryPhase {
    /// Boundary parameter of each sample, per component.
    t: Vec<Vec<f64>>,
    /// Unwrapped `arg(κ²_L / κ²_F)`.
    theta: Vec<Vec<f64>>,
    /// First chart coordinate of the boundary point, as `[re, im]`.
    points: Vec<Vec<[f64; 2]>>,
    windings: Vec<i64>,
    mu: i64,
}

/// Relative phase along each boundary component of the surface, with the
/// boundary curve for drawing.
#[wasm_bindgen]
pub fn boundary_phase(manifold: &str, lagrangian: &str, surface: &str, samples: u32) -> Result<String, String> {
    if !(4..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must be in [4, {MAX_SAMPLES}]"));
    }
    let (m, l, f) = build(manifold, lagrangian, surface)?;
    let mut out = BoundaryPhase {
        t: Vec::new(),
        theta: Vec::new(),
        points: Vec::new(),
        windings: Vec::new(),
        mu: 0,
    };
    for link in f.boundary_links() {
        let trace = relative_phase_trace(&m, &l, &f, &link, samples as usize).map_err(|e| e.to_string())?;
        let winding = winding_number(&trace).map_err(|e| e.to_string())?;
        let points = trace
            .params
            .iter()
            .map(|&tau| {
                let (s, phi) = link.surface_param(tau);
                let z = f.jet(s, phi).map_err(|e| e.to_string())?.point.coords[0];
                Ok([z.re, z.im])
            })
            .collect::<Result<Vec<_>, String>>()?;
        out.mu -= winding;
        out.windings.push(winding);
        out.points.push(points);
        out.t.push(trace.params);
        out.theta.push(trace.phase);
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Winding of `κ²` along the generator loop of the Lagrangian Grassmannian
/// of `ℂⁿ` rotating coordinate `axis` (1-based).
#[wasm_bindgen]
pub fn generator_winding(n: u32, axis: u32, traversals: u32) -> Result<i32, String> {
    if !(1..=16).contains(&n) || traversals > 64 {
        return Err("n must be in 1..=16 and traversals at most 64".into());
    }
    generator_loop_winding(n as usize, axis as usize, traversals)
        .map(|w| w as i32)
        .map_err(|e| e.to_string())
}
