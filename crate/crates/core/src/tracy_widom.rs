//! Tracy-Widom F₁ through the Hastings-McLeod solution of Painlevé II, and
//! the edge rescalings that map extreme Wishart eigenvalues onto it.
//!
//! q'' = s q + 2 q³ is integrated from s_start (where q = Ai) towards
//! negative s with a high-order Taylor series method. Alongside q the
//! stepper carries the tail integrals
//!
//! U(x) = ∫ₓ^∞ q,   W(x) = ∫ₓ^∞ q²,   V(x) = ∫ₓ^∞ (s - x) q²,
//!
//! which obey U' = -q, W' = -q², V' = -W. Then
//! F₁(x) = exp(-(U + V)/2) and f₁(x) = F₁(x)(q + W)/2.

use serde::{Deserialize, Serialize};

use crate::curve::{CurveKind, TheoryCurve};
use crate::ensembles::SpectraEnsemble;
use crate::error::{invalid, Result, RmtError};
use crate::quadrature::composite;
use crate::special::{airy_ai, airy_ai_prime};

const TAYLOR_ORDER: usize = 32;
const INITIAL_STEP: f64 = 1.0 / 8.0;
const MIN_STEP: f64 = 1.0 / 1024.0;

/// Solver state at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiiState {
    pub s: f64,
    pub q: f64,
    pub dq: f64,
    /// ∫ₛ^∞ q
    pub u: f64,
    /// ∫ₛ^∞ (t - s) q²
    pub v: f64,
    /// ∫ₛ^∞ q²
    pub w: f64,
}

impl PiiState {
    /// (F₁, f₁) at this point.
    pub fn f1(&self) -> (f64, f64) {
        let cdf = (-0.5 * (self.u + self.v)).exp();
        (cdf, 0.5 * cdf * (self.q + self.w))
    }
}

/// Taylor coefficients of (q, U, V, W) about `st.s`.
struct Expansion {
    q: [f64; TAYLOR_ORDER + 1],
    u: [f64; TAYLOR_ORDER + 1],
    v: [f64; TAYLOR_ORDER + 1],
    w: [f64; TAYLOR_ORDER + 1],
}

impl Expansion {
    fn at(st: &PiiState) -> Self {
        let n = TAYLOR_ORDER;
        let mut a = [0.0; TAYLOR_ORDER + 1];
        let mut b = [0.0; TAYLOR_ORDER + 1]; // q²
        let mut c = [0.0; TAYLOR_ORDER + 1]; // q³
        a[0] = st.q;
        a[1] = st.dq;
        for k in 0..=n {
            b[k] = (0..=k).map(|i| a[i] * a[k - i]).sum();
            c[k] = (0..=k).map(|i| b[i] * a[k - i]).sum();
            if k + 2 <= n {
                let prev = if k > 0 { a[k - 1] } else { 0.0 };
                a[k + 2] = (st.s * a[k] + prev + 2.0 * c[k]) / ((k + 2) * (k + 1)) as f64;
            }
        }
        let mut u = [0.0; TAYLOR_ORDER + 1];
        let mut w = [0.0; TAYLOR_ORDER + 1];
        let mut v = [0.0; TAYLOR_ORDER + 1];
        u[0] = st.u;
        w[0] = st.w;
        v[0] = st.v;
        for k in 0..n {
            u[k + 1] = -a[k] / (k + 1) as f64;
            w[k + 1] = -b[k] / (k + 1) as f64;
        }
        for k in 0..n {
            v[k + 1] = -w[k] / (k + 1) as f64;
        }
        Self { q: a, u, v, w }
    }

    fn eval(&self, s0: f64, h: f64) -> PiiState {
        let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &x| acc * h + x);
        let dq = self.q.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &x)| acc * h + k as f64 * x);
        PiiState { s: s0 + h, q: horner(&self.q), dq, u: horner(&self.u), v: horner(&self.v), w: horner(&self.w) }
    }
}

/// Hastings-McLeod solution on a descending grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PainleveSolution {
    /// Descending in s, first entry at s_start.
    pub grid: Vec<PiiState>,
    pub step: f64,
    /// Largest change of F₁ or f₁ between step h and h/2 on the common
    /// grid; NaN for a fixed-step solve.
    pub error_estimate: f64,
    pub tolerance: f64,
}

/// Airy data and analytic tail integrals at `s0`.
fn airy_start(s0: f64) -> PiiState {
    let ai = airy_ai(s0);
    let aip = airy_ai_prime(s0);
    let w = aip * aip - s0 * ai * ai;
    let v = (2.0 * s0 * s0 * ai * ai - 2.0 * s0 * aip * aip - ai * aip) / 3.0;
    // Ai decays like exp(-2s^{3/2}/3): 40 units past s0 is far below eps.
    let u = composite(s0, s0 + 40.0, 200, airy_ai);
    PiiState { s: s0, q: ai, dq: aip, u, v, w }
}

fn integrate(s_start: f64, s_end: f64, step: f64) -> Result<Vec<PiiState>> {
    let steps = ((s_start - s_end) / step).round() as usize;
    let mut grid = Vec::with_capacity(steps + 1);
    let mut st = airy_start(s_start);
    grid.push(st);
    for i in 1..=steps {
        let s_next = s_start - step * i as f64;
        st = Expansion::at(&st).eval(st.s, s_next - st.s);
        st.s = s_next;
        // HM is positive and follows sqrt(-s/2) on the left; leaving that
        // corridor means the Bi-type instability has taken over.
        let bound = 2.0 + 2.0 * (-s_next).max(0.0).sqrt();
        if !st.q.is_finite() || st.q <= 0.0 || st.q > bound {
            return Err(RmtError::PainleveBlowUp { location: s_next, value: st.q });
        }
        grid.push(st);
    }
    Ok(grid)
}

/// One backward integration at a fixed step, without error control.
pub fn solve_pii_fixed_step(s_start: f64, s_end: f64, step: f64) -> Result<PainleveSolution> {
    if !(step > 0.0) || !(s_start > s_end) {
        return Err(invalid("need s_start > s_end and a positive step"));
    }
    let grid = integrate(s_start, s_end, step)?;
    Ok(PainleveSolution { grid, step, error_estimate: f64::NAN, tolerance: f64::NAN })
}

/// Integrates Painlevé II backwards from Airy data at `s_start` down to
/// `s_end`, halving the step until successive solutions agree within `tol`.
pub fn solve_pii(s_start: f64, s_end: f64, tol: f64) -> Result<PainleveSolution> {
    if s_start < 6.0 {
        return Err(invalid(format!("s_start = {s_start} must be at least 6")));
    }
    if s_end > -10.0 {
        return Err(invalid(format!("s_end = {s_end} must be at most -10")));
    }
    if !(tol >= 1e-12) {
        return Err(invalid(format!("tolerance {tol:e} below 1e-12")));
    }
    let mut step = INITIAL_STEP;
    let mut coarse = integrate(s_start, s_end, step)?;
    loop {
        let fine = integrate(s_start, s_end, step / 2.0)?;
        let err = coarse
            .iter()
            .zip(fine.iter().step_by(2))
            .map(|(a, b)| {
                let (fa, fb) = (a.f1(), b.f1());
                (fa.0 - fb.0).abs().max((fa.1 - fb.1).abs())
            })
            .fold(0.0, f64::max);
        if err <= tol {
            return Ok(PainleveSolution { grid: fine, step: step / 2.0, error_estimate: err, tolerance: tol });
        }
        step /= 2.0;
        if step < MIN_STEP {
            return Err(RmtError::Quadrature(format!("Painleve II step-halving stalled at error {err:e}")));
        }
        coarse = fine;
    }
}

impl PainleveSolution {
    pub fn s_start(&self) -> f64 {
        self.grid[0].s
    }

    pub fn s_end(&self) -> f64 {
        self.grid[self.grid.len() - 1].s
    }

    /// Full state at any s in the solved range, from the Taylor expansion
    /// about the nearest grid point.
    pub fn state(&self, s: f64) -> Result<PiiState> {
        let (lo, hi) = (self.s_end(), self.s_start());
        if !(s >= lo - 1e-12 && s <= hi + 1e-12) {
            return Err(RmtError::OutOfRange { x: s, lo, hi });
        }
        let idx = (((hi - s) / self.step).round() as usize).min(self.grid.len() - 1);
        let node = &self.grid[idx];
        let mut st = Expansion::at(node).eval(node.s, s - node.s);
        st.s = s;
        Ok(st)
    }

    pub fn q(&self, s: f64) -> Result<f64> {
        Ok(self.state(s)?.q)
    }
}

/// F₁ and its density backed by one Painlevé solve.
#[derive(Debug, Clone)]
pub struct TracyWidom {
    pub solution: PainleveSolution,
    mean: f64,
    variance: f64,
}

pub const DEFAULT_S_START: f64 = 8.0;
pub const DEFAULT_S_END: f64 = -10.0;
pub const DEFAULT_TOL: f64 = 1e-12;

impl TracyWidom {
    pub fn new(s_start: f64, s_end: f64, tol: f64) -> Result<Self> {
        let solution = solve_pii(s_start, s_end, tol)?;
        let mut tw = Self { solution, mean: 0.0, variance: 0.0 };
        let (m, v) = tw.moments();
        tw.mean = m;
        tw.variance = v;
        Ok(tw)
    }

    /// Solver with the default range [-10, 8].
    pub fn standard() -> Result<Self> {
        Self::new(DEFAULT_S_START, DEFAULT_S_END, DEFAULT_TOL)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.solution.s_end(), self.solution.s_start())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let st = self.solution.state(x)?;
        Ok((-0.5 * (st.u + st.v)).exp())
    }

    /// Analytic derivative of [`TracyWidom::cdf`].
    pub fn pdf(&self, x: f64) -> Result<f64> {
        let st = self.solution.state(x)?;
        Ok((-0.5 * (st.u + st.v)).exp() * 0.5 * (st.q + st.w))
    }

    /// F₁ clamped to 0 / 1 outside the solved range.
    pub fn cdf_clamped(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        if x <= lo {
            0.0
        } else if x >= hi {
            1.0
        } else {
            self.cdf(x).unwrap_or(f64::NAN)
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    fn moments(&self) -> (f64, f64) {
        let (lo, hi) = self.range();
        let panels = ((hi - lo) * 8.0) as usize;
        let pdf = |x: f64| self.pdf(x).unwrap_or(0.0);
        let m = composite(lo, hi, panels, |x| x * pdf(x));
        let v = composite(lo, hi, panels, |x| (x - m) * (x - m) * pdf(x));
        (m, v)
    }

    /// Rows of (x, F₁, f₁) from `from` to `to` in steps of `step`.
    pub fn table(&self, from: f64, to: f64, step: f64) -> Result<Vec<(f64, f64, f64)>> {
        if !(step > 0.0) || to < from {
            return Err(invalid("table needs from <= to and a positive step"));
        }
        let n = ((to - from) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| {
                let x = from + step * i as f64;
                Ok((x, self.cdf(x)?, self.pdf(x)?))
            })
            .collect()
    }

    pub fn curve(&self, kind: CurveKind, xs: &[f64]) -> Result<TheoryCurve> {
        let ys = match kind {
            CurveKind::TwCdf => xs.iter().map(|&x| self.cdf(x)).collect::<Result<Vec<_>>>()?,
            CurveKind::TwPdf => xs.iter().map(|&x| self.pdf(x)).collect::<Result<Vec<_>>>()?,
            other => return Err(invalid(format!("{other:?} is not a Tracy-Widom curve"))),
        };
        Ok(TheoryCurve::new(kind, &[("beta", 1.0)], xs.to_vec(), ys))
    }
}

/// Centring and scaling constants for the extreme eigenvalues of
/// W = (1/T)XᵀX.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TWScalings {
    pub a_small: f64,
    pub b_small: f64,
    pub a_large: f64,
    pub b_large: f64,
}

/// Square-root edge constants with T-1 degrees of freedom, divided by T.
pub fn wl_scaling_constants(n: usize, t: usize) -> Result<TWScalings> {
    if n == 0 || t <= n {
        return Err(invalid(format!("need t > n >= 1, got n={n}, t={t}")));
    }
    let (sn, st) = ((n as f64).sqrt(), ((t - 1) as f64).sqrt());
    let tf = t as f64;
    let plus = st + sn;
    let minus = st - sn;
    Ok(TWScalings {
        a_large: plus * plus / tf,
        b_large: plus * (1.0 / st + 1.0 / sn).cbrt() / tf,
        a_small: minus * minus / tf,
        b_small: minus * (1.0 / sn - 1.0 / st).cbrt() / tf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Edge {
    Smallest,
    Largest,
}

/// Rescaled extremes together with the centring/scale that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledExtremes {
    pub chi: Vec<f64>,
    pub edge: Edge,
    pub location: f64,
    pub scale: f64,
    /// True when location and scale came from moment matching.
    pub moment_matched: bool,
}

/// χ_max = (λ_max - a)/b or χ_min = (a - λ_min)/b.
///
/// Without `scalings`, the location and scale are fitted so that the χ
/// sample has the mean and variance of F₁ (`tw` supplies those).
pub fn rescale_extremes(
    e: &SpectraEnsemble,
    edge: Edge,
    scalings: Option<&TWScalings>,
    tw: &TracyWidom,
) -> Result<RescaledExtremes> {
    if e.is_empty() {
        return Err(RmtError::Empty("ensemble"));
    }
    let lambdas = match edge {
        Edge::Smallest => e.smallest(),
        Edge::Largest => e.largest(),
    };
    let sign = match edge {
        Edge::Smallest => -1.0,
        Edge::Largest => 1.0,
    };
    let (location, scale, moment_matched) = match scalings {
        Some(sc) => match edge {
            Edge::Smallest => (sc.a_small, sc.b_small, false),
            Edge::Largest => (sc.a_large, sc.b_large, false),
        },
        None => {
            let n = lambdas.len() as f64;
            if lambdas.len() < 2 {
                return Err(invalid("moment matching needs at least two extremes"));
            }
            let mean = lambdas.iter().sum::<f64>() / n;
            let var = lambdas.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
            if !(var > 0.0) {
                return Err(RmtError::Degenerate("extremes have zero variance".into()));
            }
            let scale = (var / tw.variance()).sqrt();
            // sign·(mean - loc)/scale = μ_TW
            (mean - sign * tw.mean() * scale, scale, true)
        }
    };
    let chi = lambdas.iter().map(|l| sign * (l - location) / scale).collect();
    Ok(RescaledExtremes { chi, edge, location, scale, moment_matched })
}
