//! Gauss rules and a log-space integrator for sharply peaked positive
//! integrands.

use std::sync::OnceLock;

use crate::error::{Result, RmtError};
use crate::linalg::tridiagonal_eigen;
use crate::special::ln_gamma;

/// Nodes and weights of an interpolatory quadrature rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// n-point Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on
    /// the Legendre recurrence.
    pub fn legendre(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Generalised Gauss-Laguerre rule for the weight t^a e^{-t} on
    /// (0, ∞), via Golub-Welsch. Weights are normalised to sum to one, so
    /// the rule computes expectations under Gamma(a + 1, 1).
    pub fn laguerre_normalized(n: usize, a: f64) -> Result<Self> {
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 + a + 1.0).collect();
        let off: Vec<f64> = (1..n).map(|i| (i as f64 * (i as f64 + a)).sqrt()).collect();
        let (nodes, first) = tridiagonal_eigen(&diag, &off)?;
        let weights = first.iter().map(|v| v * v).collect();
        Ok(Self { nodes, weights })
    }

    /// Integral of `f` over [a, b] with the rule mapped affinely.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

const PANEL_ORDER: usize = 20;

/// Cached 20-point Gauss-Legendre rule used for composite panels.
pub fn panel_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(PANEL_ORDER))
}

/// Composite Gauss-Legendre on [a, b] with `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let rule = panel_rule();
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            rule.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// A positive integral represented as `exp(log_scale) * mantissa`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIntegral {
    pub log_scale: f64,
    pub mantissa: f64,
}

impl ScaledIntegral {
    pub fn ln(&self) -> f64 {
        self.log_scale + self.mantissa.ln()
    }

    pub fn value(&self) -> f64 {
        self.ln().exp()
    }
}

/// Depth below the peak (in log units) at which the integrand is dropped.
const TRIM_DEPTH: f64 = 60.0;
const SCAN_POINTS: usize = 1024;

/// Integrates `exp(log_f)` over the finite interval [a, b] for a positive,
/// unimodal or near-unimodal integrand that may be extremely narrow.
///
/// The peak is located on a dense scan, the range trimmed to where the
/// integrand is within `exp(-60)` of the peak, and composite Gauss-Legendre
/// panels doubled until the relative change drops below `rel_tol`.
pub fn integrate_log<F: Fn(f64) -> f64>(log_f: F, a: f64, b: f64, rel_tol: f64) -> Result<ScaledIntegral> {
    if !(b > a) {
        return Err(RmtError::Quadrature(format!("empty interval [{a}, {b}]")));
    }
    let step = (b - a) / SCAN_POINTS as f64;
    let grid: Vec<f64> = (0..=SCAN_POINTS).map(|i| a + step * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| log_f(x)).collect();
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| RmtError::Quadrature("integrand is nowhere finite".into()))?;

    // Refine the peak between neighbouring scan points.
    let (mut lo, mut hi) = (grid[imax.saturating_sub(1)], grid[(imax + 1).min(SCAN_POINTS)]);
    let mut peak = vmax;
    for _ in 0..80 {
        let m1 = lo + (hi - lo) * 0.381_966_011_250_105;
        let m2 = hi - (hi - lo) * 0.381_966_011_250_105;
        let (f1, f2) = (log_f(m1), log_f(m2));
        if f1.is_finite() && (f1 >= f2 || !f2.is_finite()) {
            hi = m2;
            peak = peak.max(f1);
        } else {
            lo = m1;
            peak = peak.max(f2);
        }
    }
    let cut = peak - TRIM_DEPTH;

    let below = |x: f64| {
        let v = log_f(x);
        !v.is_finite() || v < cut
    };
    let mut left_i = imax;
    while left_i > 0 && !below(grid[left_i - 1]) {
        left_i -= 1;
    }
    let mut right_i = imax;
    while right_i < SCAN_POINTS && !below(grid[right_i + 1]) {
        right_i += 1;
    }
    let left = if left_i == 0 { a } else { bisect_edge(&below, grid[left_i - 1], grid[left_i]) };
    let right = if right_i == SCAN_POINTS { b } else { bisect_edge(&below, grid[right_i + 1], grid[right_i]) };

    let eval = |panels: usize| composite(left, right, panels, |x| (log_f(x) - peak).exp());
    let mut panels = 2;
    let mut prev = eval(panels);
    while panels < 1 << 14 {
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return Ok(ScaledIntegral { log_scale: peak, mantissa: cur });
        }
        prev = cur;
    }
    Err(RmtError::Quadrature(format!("no convergence on [{left}, {right}] after {panels} panels")))
}

/// Point between `outside` (below the cut) and `inside` where the
/// integrand crosses the cut.
fn bisect_edge<G: Fn(f64) -> bool>(below: &G, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (outside + inside);
        if below(mid) {
            outside = mid;
        } else {
            inside = mid;
        }
    }
    outside
}

/// `E[exp(-beta t^2)]` for t ~ Gamma(shape, 1), computed as
/// `∫ t^{shape-1} e^{-t - beta t^2} dt / Γ(shape)` in log space over
/// u = ln t.
pub fn gamma_gaussian_expectation(shape: f64, beta: f64, rel_tol: f64) -> Result<f64> {
    if !(shape > 0.0) || !(beta >= 0.0) {
        return Err(RmtError::Quadrature(format!("bad arguments shape={shape}, beta={beta}")));
    }
    if beta == 0.0 {
        return Ok(1.0);
    }
    // Mode in u: shape - t - 2 beta t^2 = 0.
    let t_star = 2.0 * shape / (1.0 + (1.0 + 8.0 * beta * shape).sqrt());
    let u_star = t_star.ln();
    let width = 1.0 / (t_star + 4.0 * beta * t_star * t_star).sqrt();
    let log_f = |u: f64| {
        let t = u.exp();
        shape * u - t - beta * t * t
    };
    let peak = log_f(u_star);
    let mut lo = u_star - width;
    while log_f(lo) > peak - TRIM_DEPTH - 10.0 {
        lo -= 2.0 * (u_star - lo);
    }
    let mut hi = u_star + width;
    while log_f(hi) > peak - TRIM_DEPTH - 10.0 {
        hi += 2.0 * (hi - u_star);
    }
    let integral = integrate_log(log_f, lo, hi, rel_tol)?;
    Ok((integral.ln() - ln_gamma(shape)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::legendre(10);
        // degree 19 is the exactness limit
        let v = rule.integrate(0.0, 1.0, |x| x.powi(19));
        assert!((v - 1.0 / 20.0).abs() < 1e-15);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_moments() {
        // E[t^k] under Gamma(a+1) is (a+1)(a+2)...(a+k)
        let a = 2.5;
        let rule = GaussRule::laguerre_normalized(24, a).unwrap();
        let m1: f64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * t).sum();
        let m2: f64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * t * t).sum();
        assert!((m1 - 3.5).abs() < 1e-12);
        assert!((m2 - 3.5 * 4.5).abs() < 1e-11);
    }

    #[test]
    fn log_integrator_on_narrow_gaussian() {
        let s = 1e-4;
        let r = integrate_log(|x| -0.5 * ((x - 0.3) / s).powi(2), 0.0, 1.0, 1e-12).unwrap();
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value() / exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_gaussian_limits() {
        assert_eq!(gamma_gaussian_expectation(3.0, 0.0, 1e-12).unwrap(), 1.0);
        // beta tiny: 1 - beta E[t^2] to first order
        let b = 1e-8;
        let v = gamma_gaussian_expectation(3.0, b, 1e-13).unwrap();
        assert!((v - (1.0 - b * 12.0)).abs() < 1e-12);
    }
}
