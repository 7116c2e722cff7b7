//! Browser bindings for the demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain function in [`ops`] so the
//! logic can be tested natively.

use wasm_bindgen::prelude::*;

pub mod ops;

/// A small simulated dataset with one trained hierarchy.
#[wasm_bindgen]
pub struct Demo {
    inner: ops::DemoState,
}

#[wasm_bindgen]
impl Demo {
    /// Simulates `n_days` days and trains `arch` ("IPM", "NCM" or "ECM") on
    /// 80% of them.
    #[wasm_bindgen(constructor)]
    pub fn new(
        arch: &str,
        n_days: usize,
        inner_iterations: usize,
        global_passes: usize,
        seed: u64,
    ) -> Result<Demo, JsError> {
        ops::DemoState::train(arch, n_days, inner_iterations, global_passes, seed)
            .map(|inner| Demo { inner })
            .map_err(|e| JsError::new(&e))
    }

    /// Rand index of the self subjective-value node on the test days.
    #[wasm_bindgen(js_name = randIndex)]
    pub fn rand_index(&self) -> Result<f64, JsError> {
        self.inner.rand_index().map_err(|e| JsError::new(&e))
    }

    /// Both extrapolation sweeps as a JSON array of
    /// `{sweep, self_p, partner_p, mean, sem}`.
    pub fn extrapolation(&self, n_trials: u32, reps: usize) -> Result<String, JsError> {
        self.inner
            .extrapolation(n_trials, reps)
            .map_err(|e| JsError::new(&e))
    }
}

/// NMI (bits) of a joint table given as JSON rows, e.g. `[[0.4,0.1],[0.1,0.4]]`.
#[wasm_bindgen(js_name = nmiOfJoint)]
pub fn nmi_of_joint(table_json: &str) -> Result<String, JsError> {
    ops::nmi_of_joint(table_json).map_err(|e| JsError::new(&e))
}

/// Licking histograms for six comma-separated block means, as JSON
/// `[[lick, no_lick], ...]`.
#[wasm_bindgen(js_name = encodeLicking)]
pub fn encode_licking(means: &str) -> Result<String, JsError> {
    ops::encode_licking(means).map_err(|e| JsError::new(&e))
}
