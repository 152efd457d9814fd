//! Monte Carlo checks of samplers and estimators against independent
//! closed forms.

use rmt_core::densities::mp_cdf;
use rmt_core::ensembles::{sample_generalized, sample_wishart, GenParams, WLParams};
use rmt_core::fitting::{fit_alpha_density, ks_distance};
use rmt_core::spacings::{individual_spacings, wigner_cdf};
use rmt_core::tracy_widom::{rescale_extremes, wl_scaling_constants, Edge, TracyWidom};
use rmt_core::unfolding::{estimate_cumulative, UnfoldConfig};
use statrs::function::beta::beta_reg;

/// DKW: P(KS > ε) ≤ 2 exp(-2nε²); ε for a one-in-10⁴ false alarm.
fn dkw(n: usize) -> f64 {
    ((2.0f64 / 1e-4).ln() / (2.0 * n as f64)).sqrt()
}

fn skewness(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n / var.powf(1.5)
}

#[test]
fn generalised_trace_follows_beta_prime_law() {
    // u = Tr XᵀX has density ∝ u^{NT/2-1} (1 + u/ν)^{-ν}, so u/ν is
    // beta-prime(NT/2, α+1)
    for &(n, t, alpha) in &[(3usize, 5usize, 0.7), (6, 10, 3.0)] {
        let p = GenParams::new(n, t, alpha).unwrap();
        let count = 4000;
        let e = sample_generalized(&p, count, 21).unwrap();
        let nu = p.nu();
        let u: Vec<f64> = e.spectra.iter().map(|s| t as f64 * s.lambdas.iter().sum::<f64>()).collect();
        let a = 0.5 * (n * t) as f64;
        let ks = ks_distance(&u, |x| {
            let w = x / nu;
            beta_reg(a, alpha + 1.0, w / (1.0 + w))
        })
        .unwrap();
        assert!(ks < dkw(count), "n={n} t={t} alpha={alpha}: ks {ks}");
    }
}

#[test]
fn wl_trace_is_chi_square() {
    // Tr XᵀX ~ χ²_{NT}: u/2 ~ Gamma(NT/2)
    let (n, t, count) = (4usize, 9usize, 4000);
    let e = sample_wishart(&WLParams::new(n, t).unwrap(), count, 22).unwrap();
    let u: Vec<f64> = e.spectra.iter().map(|s| t as f64 * s.lambdas.iter().sum::<f64>()).collect();
    let k = (n * t) as f64;
    let ks = ks_distance(&u, |x| statrs::function::gamma::gamma_lr(0.5 * k, 0.5 * x)).unwrap();
    assert!(ks < dkw(count), "ks {ks}");
}

#[test]
fn bulk_individual_spacings_follow_wigner() {
    let e = sample_wishart(&WLParams::new(20, 60).unwrap(), 10_000, 23).unwrap();
    let s = individual_spacings(&e, 10).unwrap();
    let ks = ks_distance(&s.values, wigner_cdf).unwrap();
    assert!(ks < 0.03, "ks {ks}");
}

#[test]
fn counting_polynomial_tracks_scaled_mp_cdf() {
    let (n, t) = (20usize, 48usize);
    let e = sample_wishart(&WLParams::new(n, t).unwrap(), 400, 24).unwrap();
    let fit = estimate_cumulative(&e, &UnfoldConfig::default()).unwrap();
    let c = n as f64 / t as f64;
    let worst = fit.grid.iter().map(|&y| (fit.eval(y) - n as f64 * mp_cdf(y, c).unwrap()).abs()).fold(0.0, f64::max);
    // finite-N eigenvalues spill past the MP edges where N·F_MP is flat;
    // measured 0.74 at this seed
    assert!(worst < 1.0, "max deviation {worst}");
    assert!((fit.eval(*fit.grid.last().unwrap()) - n as f64).abs() < 0.5);
}

#[test]
fn extreme_skewness_signs_agree() {
    let (n, t) = (30usize, 120usize);
    let e = sample_wishart(&WLParams::new(n, t).unwrap(), 3000, 25).unwrap();
    let tw = TracyWidom::standard().unwrap();
    let sc = wl_scaling_constants(n, t).unwrap();
    let hi = rescale_extremes(&e, Edge::Largest, Some(&sc), &tw).unwrap();
    let lo = rescale_extremes(&e, Edge::Smallest, Some(&sc), &tw).unwrap();
    let (a, b) = (skewness(&hi.chi), skewness(&lo.chi));
    assert!(a > 0.0 && b > 0.0, "skewness {a} {b}");
}

#[test]
fn density_fit_ignores_eigenvalue_order() {
    let e = sample_generalized(&GenParams::new(20, 80, 2.0).unwrap(), 40, 26).unwrap();
    let pooled = e.pooled_unit_mean();
    let mut reversed = pooled.clone();
    reversed.reverse();
    let a = fit_alpha_density(&pooled, 0.25, Some(30)).unwrap();
    let b = fit_alpha_density(&reversed, 0.25, Some(30)).unwrap();
    assert_eq!(a.alpha_hat, b.alpha_hat);
    assert!(a.ks >= 0.0 && a.ks <= 1.0);
}
