//! Browser bindings: fiber band edges and eigenvalues at a chosen k, and
//! the essential spectrum for a chosen (mu, gamma).

use torusspec::friedrichs::{
    critical_mu, essential_spectrum, fiber_eigenvalue_above, fiber_eigenvalue_below, Side,
};
use torusspec::lattice::{band_edges_for_k, CouplingParams, SearchSpec, TorusPoint};
use torusspec::quadrature::QuadratureSpec;
use wasm_bindgen::prelude::*;

fn js_err(e: torusspec::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::with_n(16)
}

/// `[m(k), M(k)]`, the range of `p -> w2(k, p)`.
#[wasm_bindgen]
pub fn fiber_band(k1: f64, k2: f64, k3: f64) -> Result<Vec<f64>, JsError> {
    let e = band_edges_for_k(&TorusPoint::new(k1, k2, k3), &SearchSpec::default()).map_err(js_err)?;
    Ok(vec![e.min, e.max])
}

/// Fiber eigenvalues `[below, above]`; NaN where there is none.
#[wasm_bindgen]
pub fn fiber_eigenvalues(mu: f64, gamma: f64, k1: f64, k2: f64, k3: f64) -> Result<Vec<f64>, JsError> {
    let p = CouplingParams::new(mu, gamma).map_err(js_err)?;
    let k = TorusPoint::new(k1, k2, k3);
    let lo = fiber_eigenvalue_below(&p, &k, &spec()).map_err(js_err)?;
    let hi = fiber_eigenvalue_above(&p, &k, &spec()).map_err(js_err)?;
    Ok(vec![lo.unwrap_or(f64::NAN), hi.unwrap_or(f64::NAN)])
}

/// Essential spectrum, flattened as `[lo0, hi0, lo1, hi1, ...]`.
#[wasm_bindgen]
pub fn essential(mu: f64, gamma: f64, kgrid: usize) -> Result<Vec<f64>, JsError> {
    let p = CouplingParams::new(mu, gamma).map_err(js_err)?;
    let set = essential_spectrum(&p, kgrid, &spec()).map_err(js_err)?;
    Ok(set.intervals.iter().flatten().copied().collect())
}

/// `mu_l(gamma)` for `side = "left"`, `mu_r(gamma)` for `"right"`.
#[wasm_bindgen]
pub fn critical_coupling(gamma: f64, side: &str) -> Result<f64, JsError> {
    let side: Side = side.parse().map_err(js_err)?;
    critical_mu(gamma, side).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners() {
        assert_eq!(fiber_band(0.0, 0.0, 0.0).unwrap(), vec![0.0, 9.0]);
        let v = essential(1e-3, 6.0, 12).unwrap();
        assert_eq!(v, vec![0.0, 18.0]);
    }
}
