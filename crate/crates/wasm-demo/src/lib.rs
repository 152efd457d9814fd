//! wasm-bindgen exports for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array` of rows; the row width is
//! fixed per function and documented on it. The plain functions below do
//! the work and are what the host tests call.

// `!(x > 0.0)` is deliberate: NaN has to fail every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rmt_core::curve::linspace;
use rmt_core::densities::{generalized_density, mp_density, mp_support};
use rmt_core::ensembles::{sample_generalized, sample_wishart, GenParams, WLParams};
use rmt_core::fitting::default_bins;
use rmt_core::spacings::{generalized_surmise, wigner_surmise};
use rmt_core::spectra::histogram_density;
use rmt_core::{Result, RmtError};
use wasm_bindgen::prelude::*;

/// Sampling budget: count·n·t matrix entries. Keeps the page responsive.
pub const MAX_ENTRIES: usize = 20_000_000;

fn bad(msg: impl Into<String>) -> RmtError {
    RmtError::InvalidParameter(msg.into())
}

/// Rows (x, ρ_α(x), ρ_MP(x)) on [x_max/points, x_max].
pub fn density_rows(c: f64, alpha: f64, points: usize, x_max: f64) -> Result<Vec<f64>> {
    mp_support(c)?;
    if points < 2 || !(x_max > 0.0) {
        return Err(bad("need at least two points and a positive range"));
    }
    let mut out = Vec::with_capacity(3 * points);
    for x in linspace(x_max / points as f64, x_max, points) {
        out.extend([x, generalized_density(x, c, alpha)?, mp_density(x, c)]);
    }
    Ok(out)
}

/// Rows (s, p_α(s), Wigner(s)) on [0, s_max].
pub fn spacing_rows(alpha: f64, points: usize, s_max: f64) -> Result<Vec<f64>> {
    if points < 2 || !(s_max > 0.0) {
        return Err(bad("need at least two points and a positive range"));
    }
    let mut out = Vec::with_capacity(3 * points);
    for s in linspace(0.0, s_max, points) {
        out.extend([s, generalized_surmise(s, alpha)?, wigner_surmise(s)]);
    }
    Ok(out)
}

/// Samples `count` matrices (Gaussian when `alpha` is not finite or
/// positive, power-law otherwise) and returns rows (centre, height,
/// theory) of the pooled unit-mean eigenvalue histogram, theory being ρ_α
/// or ρ_MP at c = n/t.
pub fn sampled_rows(n: usize, t: usize, alpha: f64, count: usize, seed: u64, bins: usize) -> Result<Vec<f64>> {
    if n.saturating_mul(t).saturating_mul(count) > MAX_ENTRIES {
        return Err(bad(format!("count·n·t above the demo budget of {MAX_ENTRIES}")));
    }
    let gaussian = !(alpha.is_finite() && alpha > 0.0);
    let e = if gaussian {
        sample_wishart(&WLParams::new(n, t)?, count, seed)?
    } else {
        sample_generalized(&GenParams::new(n, t, alpha)?, count, seed)?
    };
    let pooled = e.pooled_unit_mean();
    let bins = if bins == 0 { default_bins(pooled.len()) } else { bins };
    let h = histogram_density(&pooled, bins, None)?;
    let c = n as f64 / t as f64;
    let mut out = Vec::with_capacity(3 * bins);
    for (x, &y) in h.centers().into_iter().zip(&h.heights) {
        let theory = if gaussian { mp_density(x, c) } else { generalized_density(x, c, alpha)? };
        out.extend([x, y, theory]);
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn density_curves(c: f64, alpha: f64, points: usize, x_max: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(density_rows(c, alpha, points, x_max))
}

#[wasm_bindgen]
pub fn spacing_curves(alpha: f64, points: usize, s_max: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(spacing_rows(alpha, points, s_max))
}

#[wasm_bindgen]
pub fn sampled_histogram(
    n: usize,
    t: usize,
    alpha: f64,
    count: usize,
    seed: u32,
    bins: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(sampled_rows(n, t, alpha, count, seed as u64, bins))
}
