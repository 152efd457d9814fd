//! Special functions: log-gamma (delegated to `statrs`) and the Airy
//! function Ai with its derivative on the nonnegative axis.

use std::sync::OnceLock;

use crate::quadrature::GaussRule;

pub use statrs::function::gamma::{gamma, ln_gamma};

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = -0.258_819_403_792_806_8;
const SERIES_LIMIT: f64 = 2.0;
const LAGUERRE_NODES: usize = 48;

fn rule_minus_sixth() -> &'static GaussRule {
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::laguerre_normalized(LAGUERRE_NODES, -1.0 / 6.0).expect("Golub-Welsch for Ai"))
}

fn rule_plus_sixth() -> &'static GaussRule {
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::laguerre_normalized(LAGUERRE_NODES, 1.0 / 6.0).expect("Golub-Welsch for Ai'"))
}

/// Maclaurin series: returns (Ai, Ai').
fn airy_series(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut df, mut dg) = (0.0, 1.0);
    let (mut tf, mut tg) = (1.0, x);
    for k in 1..60 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        f += tf;
        g += tg;
        if x != 0.0 {
            df += tf * k3 / x;
            dg += tg * (k3 + 1.0) / x;
        }
        if tf.abs() < 1e-18 * f.abs() && tg.abs() < 1e-18 * g.abs().max(1e-300) {
            break;
        }
    }
    (AI0 * f + AIP0 * g, AI0 * df + AIP0 * dg)
}

/// Airy function Ai(x) for x ≥ 0. Returns NaN for negative arguments.
pub fn airy_ai(x: f64) -> f64 {
    if x < 0.0 || x.is_nan() {
        return f64::NAN;
    }
    if x <= SERIES_LIMIT {
        return airy_series(x).0;
    }
    // Ai(x) = ζ^{-1/6} e^{-ζ} / (√π 48^{1/6}) E[(2 + t/ζ)^{-1/6}],
    // t ~ Gamma(5/6), ζ = 2x^{3/2}/3.
    let zeta = 2.0 * x.powf(1.5) / 3.0;
    let rule = rule_minus_sixth();
    let mean: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * (2.0 + t / zeta).powf(-1.0 / 6.0))
        .sum();
    let ln_pref = -zeta.ln() / 6.0 - zeta - 0.5 * std::f64::consts::PI.ln() - 48f64.ln() / 6.0;
    ln_pref.exp() * mean
}

/// Derivative Ai'(x) for x ≥ 0. Returns NaN for negative arguments.
pub fn airy_ai_prime(x: f64) -> f64 {
    if x < 0.0 || x.is_nan() {
        return f64::NAN;
    }
    if x <= SERIES_LIMIT {
        return airy_series(x).1;
    }
    // Ai'(x) = -(3ζ)^{1/6} e^{-ζ} / (2^{4/3} √π) E[(2 + t/ζ)^{1/6}],
    // t ~ Gamma(7/6).
    let zeta = 2.0 * x.powf(1.5) / 3.0;
    let rule = rule_plus_sixth();
    let mean: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * (2.0 + t / zeta).powf(1.0 / 6.0))
        .sum();
    let ln_pref = (3.0 * zeta).ln() / 6.0 - zeta - 4.0 / 3.0 * 2f64.ln() - 0.5 * std::f64::consts::PI.ln();
    -ln_pref.exp() * mean
}
