//! Browser bindings: wave slices as RGBA images, the greedy tube cover on a random
//! family, and the extraction trace of a cube-train wave.

use conewave::extraction::{extract_profile, ExtractionOptions};
use conewave::geometry::{direction, Point, Torus, Tube};
use conewave::io::heatmap;
use conewave::norms::QuadratureScheme;
use conewave::profile::{matched_train, SHARPNESS_ANGLE};
use conewave::tube_cover::{greedy_tube_cover, random_separated_family, verify_pointwise_bound, CoverOptions};
use conewave::wavefield::*;
use serde_json::json;
use wasm_bindgen::prelude::*;

const BOX_LEN: f64 = 64.0;
const MIN_POINTS: usize = 128;
/// Images are downsampled to at most this many pixels per side.
const MAX_SIDE: usize = 256;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// The wave of the given kind and, for tube-shaped kinds, its tube.
pub fn build_wave(kind: &str, k: u32, seed: u64) -> Result<(SpectralWave, Option<Tube>), String> {
    let c = [BOX_LEN / 2.0, BOX_LEN / 2.0];
    let lat = FrequencyLattice::for_band(k, BOX_LEN, MIN_POINTS).map_err(err)?;
    let om = direction(SHARPNESS_ANGLE);
    let out = match kind {
        "random-red" => (random_colored_wave(&lat, Color::Red, k, DEFAULT_MARGIN, seed).map_err(err)?, None),
        "random-blue" => (random_colored_wave(&lat, Color::Blue, k, DEFAULT_MARGIN, seed).map_err(err)?, None),
        "packets" => (random_blue_packets(&lat, k, 3, seed).map_err(err)?, None),
        "bump" => {
            let lat0 = FrequencyLattice::for_band(0, BOX_LEN, MIN_POINTS).map_err(err)?;
            (make_red_cube_bump(&lat0, Point::new(0.0, c), DEFAULT_MARGIN).map_err(err)?, None)
        }
        "tube" => (
            make_blue_tube_wave(&lat, 0.0, c, om, k).map_err(err)?,
            Some(Tube::finite(0.0, c, om, k)),
        ),
        "train" => {
            let (tube, w) = matched_train(k, BOX_LEN, seed).map_err(err)?;
            (w, Some(tube))
        }
        other => return Err(format!("unknown wave kind {other:?}")),
    };
    Ok(out)
}

/// `|phi(t)|` as a square RGBA image, row-major, side `sqrt(len / 4)`.
pub fn slice_rgba(kind: &str, k: u32, t: f64, seed: u64) -> Result<Vec<u8>, String> {
    let (w, tube) = build_wave(kind, k, seed)?;
    let grid = w.lattice().grid();
    let vals: Vec<f64> = w.evaluate(t).iter().map(|z| z.norm()).collect();
    let tubes: Vec<Tube> = tube.into_iter().collect();
    let rgb = heatmap(&vals, grid, &tubes, t);
    let m = grid.points;
    let stride = m.div_ceil(MAX_SIDE);
    let side = m / stride;
    let mut out = Vec::with_capacity(4 * side * side);
    for i in 0..side {
        for j in 0..side {
            let p = rgb[i * stride * m + j * stride];
            out.extend_from_slice(&[p[0], p[1], p[2], 255]);
        }
    }
    Ok(out)
}

/// Greedy cover of a random separated family, as JSON.
pub fn cover_json(k: u32, count: usize, delta: f64, seed: u64) -> Result<String, String> {
    let fam = random_separated_family(Torus::new(BOX_LEN), k, count, seed).map_err(err)?;
    let res = greedy_tube_cover(&fam, delta, &CoverOptions::default()).map_err(err)?;
    let residual = verify_pointwise_bound(&fam, &res.tubes, 20_000, seed);
    let classes: Vec<_> = res
        .classes
        .iter()
        .map(|c| json!({ "t": c.witness.t, "x": c.witness.x, "residual": c.residual, "members": c.members.len() }))
        .collect();
    Ok(json!({
        "box": BOX_LEN,
        "family": fam.tubes(),
        "weights": fam.weights(),
        "cover": res.tubes,
        "classes": classes,
        "residual": residual,
        "delta": delta,
    })
    .to_string())
}

/// Extraction on the cube-train wave of length `2^k`, as JSON.
pub fn extract_json(k: u32, delta: f64, window: f64) -> Result<String, String> {
    let scheme = QuadratureScheme::new(0.25, window).map_err(err)?;
    let (axis, phi) = matched_train(k, BOX_LEN, 1).map_err(err)?;
    let ex = extract_profile(&phi, &ExtractionOptions::new(delta), &scheme).map_err(err)?;
    let steps: Vec<_> = ex
        .trace
        .iter()
        .map(|s| {
            json!({
                "tube": s.tube,
                "value": s.value,
                "mu": s.mu,
                "mass_before": s.mass_before,
                "mass_after": s.mass_after,
                "decrement": s.decrement,
            })
        })
        .collect();
    Ok(json!({
        "axis": axis,
        "mass": phi.mass(),
        "steps": steps,
        "remainder_mass": ex.remainder.mass(),
        "remainder_concentration": ex.remainder_concentration,
        "threshold": delta * phi.mass().sqrt(),
        "partial": ex.partial,
    })
    .to_string())
}

#[wasm_bindgen(js_name = waveSlice)]
pub fn wave_slice(kind: &str, k: u32, t: f64, seed: u32) -> Result<Vec<u8>, JsError> {
    slice_rgba(kind, k, t, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = coverDemo)]
pub fn cover_demo(k: u32, count: u32, delta: f64, seed: u32) -> Result<String, JsError> {
    cover_json(k, count as usize, delta, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = extractionTrace)]
pub fn extraction_trace(k: u32, delta: f64, window: f64) -> Result<String, JsError> {
    extract_json(k, delta, window).map_err(|e| JsError::new(&e))
}
