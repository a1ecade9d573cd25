//! Browser bindings for the ptfens demo page (`www/index.html`).
//!
//! Each export is a thin wrapper over a plain Rust function so the logic is
//! testable without a JavaScript host.

use ptfens::ensemble::{ensemble_theta, WeightVector};
use ptfens::ptf::{classify_texture, PredictorRecord, PtfId, PtfLibrary};
use wasm_bindgen::prelude::*;

thread_local! {
    static LIBRARY: PtfLibrary = PtfLibrary::builtin().expect("bundled coefficient tables");
}

fn record(sand: f64, silt: f64, clay: f64, bd: f64, oc: f64) -> Result<PredictorRecord, String> {
    let rec = PredictorRecord::from_texture(sand, silt, clay).with_bulk_density(bd).with_organic_carbon(oc);
    rec.validate().map_err(|e| e.to_string())?;
    Ok(rec)
}

/// Log-spaced suctions from 1 to 10^6 cm, plus 0 in front.
pub fn suction_axis(n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut out = vec![0.0];
    out.extend((0..n).map(|i| 10f64.powf(6.0 * i as f64 / (n - 1) as f64)));
    out
}

pub fn member_names() -> Vec<&'static str> {
    LIBRARY.with(|lib| lib.available().into_iter().map(PtfId::name).collect())
}

pub fn classify(sand: f64, silt: f64, clay: f64) -> Result<String, String> {
    classify_texture(sand, silt, clay).map(|c| c.name().to_string()).map_err(|e| e.to_string())
}

/// Suction axis followed by one block per available member (NaN where the
/// member cannot predict for this soil).
pub fn curves(sand: f64, silt: f64, clay: f64, bd: f64, oc: f64, n: usize) -> Result<Vec<f64>, String> {
    let rec = record(sand, silt, clay, bd, oc)?;
    let psis = suction_axis(n);
    let mut out = psis.clone();
    LIBRARY.with(|lib| {
        for id in lib.available() {
            out.extend(psis.iter().map(|&p| lib.predict_theta(id, &rec, p).unwrap_or(f64::NAN)));
        }
    });
    Ok(out)
}

/// Ensemble curve over the available members, `weights` in [`member_names`] order.
pub fn ensemble(
    sand: f64,
    silt: f64,
    clay: f64,
    bd: f64,
    oc: f64,
    weights: &[f64],
    n: usize,
) -> Result<Vec<f64>, String> {
    let rec = record(sand, silt, clay, bd, oc)?;
    LIBRARY.with(|lib| {
        let members = lib.available();
        if weights.len() != members.len() {
            return Err(format!("expected {} weights, got {}", members.len(), weights.len()));
        }
        let w = WeightVector::new(members, weights.to_vec()).map_err(|e| e.to_string())?;
        suction_axis(n).iter().map(|&p| ensemble_theta(lib, &w, &rec, p).map_err(|e| e.to_string())).collect()
    })
}

#[wasm_bindgen(js_name = members)]
pub fn members_js() -> String {
    member_names().join(",")
}

#[wasm_bindgen(js_name = textureClass)]
pub fn texture_class_js(sand: f64, silt: f64, clay: f64) -> Result<String, JsError> {
    classify(sand, silt, clay).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = retentionCurves)]
pub fn retention_curves_js(sand: f64, silt: f64, clay: f64, bd: f64, oc: f64, n: usize) -> Result<Vec<f64>, JsError> {
    curves(sand, silt, clay, bd, oc, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = ensembleCurve)]
pub fn ensemble_curve_js(
    sand: f64,
    silt: f64,
    clay: f64,
    bd: f64,
    oc: f64,
    weights: &[f64],
    n: usize,
) -> Result<Vec<f64>, JsError> {
    ensemble(sand, silt, clay, bd, oc, weights, n).map_err(|e| JsError::new(&e))
}
