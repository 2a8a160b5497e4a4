//! wasm-bindgen entry points for the static page in `www/`. Every export
//! takes and returns JSON strings; [`api`] holds the plain Rust versions.

use wasm_bindgen::prelude::*;

pub mod api;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Clustered eigenvalues of `T_c` restricted to `H_d(B^k)`, `d = 0..=dmax`.
#[wasm_bindgen]
pub fn block_spectrum(symbol: &str, k: usize, dmax: u32) -> Result<String, JsValue> {
    js(api::block_spectrum(symbol, k, dmax))
}

/// Point spectrum, spectrum region and polynomial hull on a square grid.
#[wasm_bindgen]
pub fn spectrum_hull(symbol: &str, k: usize, dmax: u32, resolution: usize) -> Result<String, JsValue> {
    js(api::spectrum_hull(symbol, k, dmax, resolution))
}

/// `<T_c k_d, k_d>` at the base point `w` (JSON `[[re, im], ...]`).
#[wasm_bindgen]
pub fn berezin(symbol: &str, k: usize, w: &str, degrees: &str) -> Result<String, JsValue> {
    js(api::berezin(symbol, k, w, degrees))
}
