//! Tabulated theory curves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    MpDensity,
    GenDensity,
    WdSpacing,
    GenSpacing,
    TwCdf,
    TwPdf,
}

impl CurveKind {
    pub fn is_density(self) -> bool {
        !matches!(self, CurveKind::TwCdf)
    }
}

/// (x, y) samples of a density or distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub kind: CurveKind,
    pub params: BTreeMap<String, f64>,
}

impl TheoryCurve {
    pub fn new(kind: CurveKind, params: &[(&str, f64)], xs: Vec<f64>, ys: Vec<f64>) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        let params = params.iter().map(|(k, v)| ((*k).to_owned(), *v)).collect();
        Self { xs, ys, kind, params }
    }

    /// Trapezoid integral of y over the tabulated range.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.xs, &self.ys)
    }

    /// Trapezoid integral of x·y over the tabulated range.
    pub fn first_moment(&self) -> f64 {
        let xy: Vec<f64> = self.xs.iter().zip(&self.ys).map(|(x, y)| x * y).collect();
        trapezoid(&self.xs, &xy)
    }

    /// Linear interpolation, clamped to the end values outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let w = (x - x0) / (x1 - x0);
        self.ys[k - 1] * (1.0 - w) + self.ys[k] * w
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

/// `points` values evenly spaced in log between positive `lo` and `hi`.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), points).into_iter().map(f64::exp).collect()
}
