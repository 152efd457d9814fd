//! Unfolding through a polynomial fit of the ensemble-averaged counting
//! function, followed by nearest-neighbour spacings within each sample.

use serde::{Deserialize, Serialize};

use crate::ensembles::SpectraEnsemble;
use crate::error::{invalid, Result, RmtError};
use crate::linalg::{least_squares, Matrix};
use crate::spacings::{SpacingKind, SpacingSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnfoldConfig {
    pub grid_points: usize,
    pub poly_degree: usize,
    /// Histogram bins for reporting; `None` uses the fitting default.
    pub bins: Option<usize>,
    /// Start the grid at 0 instead of the smallest eigenvalue.
    #[serde(default)]
    pub from_zero: bool,
}

impl Default for UnfoldConfig {
    fn default() -> Self {
        Self { grid_points: 200, poly_degree: 5, bins: None, from_zero: false }
    }
}

impl UnfoldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.poly_degree < 1 {
            return Err(invalid("polynomial degree must be at least 1"));
        }
        if self.grid_points < self.poly_degree + 2 {
            return Err(invalid(format!(
                "grid of {} points too small for degree {}",
                self.grid_points, self.poly_degree
            )));
        }
        Ok(())
    }
}

/// Fitted counting polynomial p(y) = Σ coeffs[j] (y / scale)^j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeFit {
    pub coeffs: Vec<f64>,
    pub scale: f64,
    /// Degree actually used; lower than requested after a rank-deficient fit.
    pub degree: usize,
    pub grid: Vec<f64>,
    /// Average count of eigenvalues ≤ each grid point.
    pub counts: Vec<f64>,
    pub max_abs_residual: f64,
    pub warnings: Vec<String>,
}

impl CumulativeFit {
    pub fn eval(&self, y: f64) -> f64 {
        let z = y / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

/// Average number of eigenvalues per sample at or below each grid value.
pub fn empirical_counts(e: &SpectraEnsemble, grid: &[f64]) -> Vec<f64> {
    let m = e.len() as f64;
    grid.iter()
        .map(|&y| {
            let total: usize = e.spectra.iter().map(|s| s.lambdas.partition_point(|&l| l <= y)).sum();
            total as f64 / m
        })
        .collect()
}

pub fn estimate_cumulative(e: &SpectraEnsemble, cfg: &UnfoldConfig) -> Result<CumulativeFit> {
    cfg.validate()?;
    let top = e.spectra.iter().map(|s| s.max()).fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) || !top.is_finite() {
        return Err(RmtError::Degenerate(format!("largest eigenvalue {top}")));
    }
    let k = cfg.grid_points;
    // The grid covers the occupied range only: below the smallest
    // eigenvalue the count is identically zero, a flat stretch a low-degree
    // polynomial cannot follow without bending the bulk.
    let bottom = if cfg.from_zero { 0.0 } else { e.spectra.iter().map(|s| s.min()).fold(f64::INFINITY, f64::min) };
    let grid: Vec<f64> = (0..k).map(|r| bottom + (top - bottom) * r as f64 / (k - 1) as f64).collect();
    let counts = empirical_counts(e, &grid);
    let mut warnings = Vec::new();
    let mut degree = cfg.poly_degree;
    loop {
        let mut a = Matrix::zeros(k, degree + 1);
        for (r, &y) in grid.iter().enumerate() {
            let z = y / top;
            let mut p = 1.0;
            for j in 0..=degree {
                a[(r, j)] = p;
                p *= z;
            }
        }
        if let Some(coeffs) = least_squares(&a, &counts, 1e-12) {
            let fit = CumulativeFit { coeffs, scale: top, degree, grid, counts, max_abs_residual: 0.0, warnings };
            let resid = fit.grid.iter().zip(&fit.counts).map(|(&y, &c)| (fit.eval(y) - c).abs()).fold(0.0, f64::max);
            return Ok(CumulativeFit { max_abs_residual: resid, ..fit });
        }
        if degree == 1 {
            return Err(RmtError::Degenerate("counting function fit is rank-deficient at degree 1".into()));
        }
        warnings.push(format!("rank-deficient fit at degree {degree}, retrying at {}", degree - 1));
        degree -= 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldResult {
    pub spacings: SpacingSample,
    /// Nonpositive spacings removed where the polynomial is not monotone.
    pub dropped_nonpositive: usize,
    pub fit: CumulativeFit,
}

/// Unfolded spacings E_{j+1} - E_j with E = p(λ), pooled over samples.
pub fn unfold_spacings(e: &SpectraEnsemble, cfg: &UnfoldConfig) -> Result<UnfoldResult> {
    if e.n < 2 {
        return Err(invalid("spacings need at least two eigenvalues per sample"));
    }
    let mut fit = estimate_cumulative(e, cfg)?;
    let mut values = Vec::with_capacity(e.len() * (e.n - 1));
    let mut dropped = 0;
    for s in &e.spectra {
        let unfolded: Vec<f64> = s.lambdas.iter().map(|&l| fit.eval(l)).collect();
        for w in unfolded.windows(2) {
            let d = w[1] - w[0];
            if d > 0.0 {
                values.push(d);
            } else {
                dropped += 1;
            }
        }
    }
    if dropped > 0 {
        fit.warnings.push(format!("dropped {dropped} nonpositive spacings from a non-monotone fit"));
    }
    if values.is_empty() {
        return Err(RmtError::Degenerate("no positive unfolded spacings".into()));
    }
    Ok(UnfoldResult {
        spacings: SpacingSample { values, kind: SpacingKind::GlobalUnfolded, k_index: None },
        dropped_nonpositive: dropped,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Provenance;
    use crate::spectra::Spectrum;

    fn ensemble(spectra: &[&[f64]]) -> SpectraEnsemble {
        let s = spectra.iter().map(|v| Spectrum::new(v.to_vec(), 10)).collect();
        SpectraEnsemble::new(s, Provenance::SampledWl, 0).unwrap()
    }

    #[test]
    fn counting_example() {
        let e = ensemble(&[&[1.0, 2.0, 3.0]]);
        assert_eq!(empirical_counts(&e, &[0.0, 1.5, 2.5, 3.5]), vec![0.0, 1.0, 2.0, 3.0]);
        let two = ensemble(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(empirical_counts(&two, &[2.0, 10.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn counts_nondecreasing_and_end_at_n() {
        let e = ensemble(&[&[0.2, 0.9, 1.4, 2.6], &[0.1, 1.1, 1.2, 3.0]]);
        let fit = estimate_cumulative(&e, &UnfoldConfig::default()).unwrap();
        assert!(fit.counts.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*fit.counts.last().unwrap(), 4.0);
    }

    #[test]
    fn linear_counts_are_fitted_exactly() {
        // equally spaced levels: counting function is a staircase around y
        let levels: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let e = ensemble(&[&levels]);
        let cfg = UnfoldConfig { poly_degree: 1, ..Default::default() };
        let r = unfold_spacings(&e, &cfg).unwrap();
        let mean = r.spacings.mean();
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert_eq!(r.dropped_nonpositive, 0);
    }

    #[test]
    fn invariant_under_rescaling() {
        let e = ensemble(&[&[0.3, 1.1, 2.0, 2.4, 3.9], &[0.2, 0.9, 1.5, 3.3, 4.1], &[0.1, 0.5, 1.9, 2.2, 2.8]]);
        let mut doubled = e.clone();
        for s in &mut doubled.spectra {
            for l in &mut s.lambdas {
                *l *= 2.0;
            }
        }
        let cfg = UnfoldConfig { grid_points: 50, poly_degree: 3, ..Default::default() };
        let a = unfold_spacings(&e, &cfg).unwrap();
        let b = unfold_spacings(&doubled, &cfg).unwrap();
        for (x, y) in a.spacings.values.iter().zip(&b.spacings.values) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn config_validation() {
        assert!(UnfoldConfig { grid_points: 6, poly_degree: 5, bins: None, from_zero: false }.validate().is_err());
        assert!(UnfoldConfig { grid_points: 10, poly_degree: 0, bins: None, from_zero: false }.validate().is_err());
        assert!(UnfoldConfig::default().validate().is_ok());
    }
}
