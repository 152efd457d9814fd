//! Global eigenvalue densities in the unit-first-moment normalisation.
//!
//! Both densities are supported by the scaled Marčenko-Pastur interval
//! [cX₋, cX₊] with X± = (c^{-1/2} ± 1)². The power-law density is an
//! integral over that interval; the substitution
//! t = (X₊+X₋)/2 - (X₊-X₋)/2 · cos θ absorbs the square-root endpoints
//! into a smooth sin²θ factor before Gauss-Legendre quadrature.

use std::f64::consts::PI;

use crate::curve::{linspace, logspace, CurveKind, TheoryCurve};
use crate::error::{invalid, Result};
use crate::quadrature::{composite, integrate_log};
use crate::special::ln_gamma;

const REL_TOL: f64 = 1e-11;

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("c = {c} outside (0, 1]")))
    }
}

/// Unscaled edges (X₋, X₊).
pub fn mp_edges(c: f64) -> Result<(f64, f64)> {
    check_c(c)?;
    let r = c.sqrt().recip();
    Ok(((r - 1.0).powi(2), (r + 1.0).powi(2)))
}

/// Support (cX₋, cX₊) of the unit-mean Marčenko-Pastur law.
pub fn mp_support(c: f64) -> Result<(f64, f64)> {
    let (lo, hi) = mp_edges(c)?;
    Ok((c * lo, c * hi))
}

/// Marčenko-Pastur density with unit norm and first moment; zero outside
/// the support. NaN when `c` is outside (0, 1].
pub fn mp_density(x: f64, c: f64) -> f64 {
    let Ok((a, b)) = mp_support(c) else { return f64::NAN };
    if x <= a || x >= b {
        return 0.0;
    }
    ((x - a) * (b - x)).sqrt() / (2.0 * PI * c * x)
}

/// Marčenko-Pastur distribution function by quadrature on θ, where
/// x = m - h cos θ maps [0, π] onto the support.
pub fn mp_cdf(x: f64, c: f64) -> Result<f64> {
    let (a, b) = mp_support(c)?;
    if x <= a {
        return Ok(0.0);
    }
    if x >= b {
        return Ok(1.0);
    }
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let theta_x = ((m - x) / h).clamp(-1.0, 1.0).acos();
    // ρ dx = h² sin²θ / (2π c x) dθ
    let v = composite(0.0, theta_x, 8, |th| {
        let s = th.sin();
        h * h * s * s / (2.0 * PI * c * (m - h * th.cos()))
    });
    Ok(v.clamp(0.0, 1.0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("alpha = {alpha} must be positive")))
    }
}

/// Natural log of the power-law density ρ_α(x).
pub fn ln_generalized_density(x: f64, c: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (lo, hi) = mp_edges(c)?;
    if !(x > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let kappa = c * alpha / x;
    let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let log_integrand = |th: f64| {
        let t = m - h * th.cos();
        let s = h * th.sin();
        alpha * t.ln() - kappa * t + 2.0 * s.ln()
    };
    let integral = integrate_log(log_integrand, 0.0, PI, REL_TOL)?;
    Ok(-(2.0 * PI * c * alpha).ln() - ln_gamma(alpha + 1.0) + (alpha + 2.0) * kappa.ln() + integral.ln())
}

/// Power-law generalisation of the Marčenko-Pastur density,
///
/// ρ_α(x) = (cα/x)^{α+2} / (2πcαΓ(α+1)) ∫_{X₋}^{X₊} t^α e^{-cαt/x} √((t-X₋)(X₊-t)) dt,
///
/// decaying as x^{-α-2} and reducing to [`mp_density`] as α → ∞.
pub fn generalized_density(x: f64, c: f64, alpha: f64) -> Result<f64> {
    Ok(ln_generalized_density(x, c, alpha)?.exp())
}

/// Distribution function of ρ_α through its scale-mixture form
/// F_α(x) = E[F_MP(x g/α)], g ~ Gamma(α+1, 1).
pub fn generalized_cdf(x: f64, c: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (a, b) = mp_support(c)?;
    if !(x > 0.0) {
        return Ok(0.0);
    }
    // F_MP(xg/α) is 0 below g_a, 1 above g_b.
    let g_a = alpha * a / x;
    let g_b = alpha * b / x;
    let shape = alpha + 1.0;
    let upper = statrs::function::gamma::gamma_ur(shape, g_b);
    let lg = ln_gamma(shape);
    let gamma_pdf = |g: f64| if g <= 0.0 { 0.0 } else { ((shape - 1.0) * g.ln() - g - lg).exp() };
    // cap the middle piece where the gamma weight is negligible
    let hi = g_b.min(shape + 60.0 * shape.sqrt() + 200.0);
    let mid = if hi > g_a {
        let mut f = |g: f64| gamma_pdf(g) * mp_cdf(x * g / alpha, c).unwrap_or(0.0);
        composite(g_a, hi, 64, &mut f)
    } else {
        0.0
    };
    Ok((mid + upper).clamp(0.0, 1.0))
}

/// Grid for tabulating densities: log-spaced below and above the support,
/// linear inside it.
pub fn density_grid(c: f64, points: usize, x_max: f64) -> Result<Vec<f64>> {
    let (a, b) = mp_support(c)?;
    let inner = (points / 2).max(2);
    let outer = points.saturating_sub(inner).max(2);
    let lower_n = outer / 3;
    let upper_n = outer - lower_n;
    let mut xs = Vec::with_capacity(points);
    if lower_n > 0 && a > 1e-3 {
        xs.extend(logspace(1e-3 * a.max(1e-3), a, lower_n + 1).into_iter().take(lower_n));
    }
    xs.extend(linspace(a.max(1e-6), b, inner));
    if x_max > b {
        xs.extend(logspace(b, x_max, upper_n + 1).into_iter().skip(1));
    }
    Ok(xs)
}

pub fn tabulate_mp(c: f64, xs: &[f64]) -> Result<TheoryCurve> {
    check_c(c)?;
    let ys = xs.iter().map(|&x| mp_density(x, c)).collect();
    Ok(TheoryCurve::new(CurveKind::MpDensity, &[("c", c)], xs.to_vec(), ys))
}

pub fn tabulate_generalized(c: f64, alpha: f64, xs: &[f64]) -> Result<TheoryCurve> {
    let ys = xs.iter().map(|&x| generalized_density(x, c, alpha)).collect::<Result<Vec<_>>>()?;
    Ok(TheoryCurve::new(CurveKind::GenDensity, &[("c", c), ("alpha", alpha)], xs.to_vec(), ys))
}
