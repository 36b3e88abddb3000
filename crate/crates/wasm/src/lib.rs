//! Browser bindings. Every export takes plain values and returns a JSON
//! string; the page parses it. The same functions back the native tests.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Split `text` into sentences and mark keyword hits. `terms` is a
/// comma-separated list of literal terms; empty means the bundled AI list.
#[wasm_bindgen]
pub fn highlight(text: &str, terms: &str) -> Result<String, JsError> {
    js(demo::highlight(text, terms))
}

/// Segment a 10-K into Items. `html` selects the HTML normalizer.
#[wasm_bindgen]
pub fn segment(document: &str, html: bool, min_body_chars: usize) -> Result<String, JsError> {
    js(demo::segment(document, html, min_body_chars))
}

/// Lower precision bound for a reviewed sample. `method` is "wald" or "wilson".
#[wasm_bindgen]
pub fn precision(n: u32, errors: u32, confidence: f64, method: &str) -> Result<String, JsError> {
    js(demo::precision(n.into(), errors.into(), confidence, method))
}
