//! Goodness of fit and one-parameter α fits against histograms.

use serde::{Deserialize, Serialize};

use crate::curve::logspace;
use crate::densities::{generalized_cdf, generalized_density};
use crate::ensembles::map_members;
use crate::error::{Result, RmtError};
use crate::spacings::{generalized_surmise, generalized_surmise_cdf, wigner_cdf, wigner_surmise, SpacingSample};
use crate::spectra::{histogram_density, rescale_values_unit_mean, DensityHistogram};

pub const ALPHA_MIN: f64 = 0.1;
pub const ALPHA_MAX: f64 = 100.0;
pub const SCAN_POINTS: usize = 60;
/// Relative width at which golden-section refinement stops.
pub const REFINE_TOL: f64 = 1e-3;
/// Upper histogram edge as a sample quantile; the remaining mass still
/// counts in the normalisation.
pub const UPPER_QUANTILE: f64 = 0.995;
/// Sorted-sample nodes at which a costly CDF is evaluated exactly for KS.
pub const KS_NODES: usize = 2048;

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(RmtError::Empty("sample"));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(RmtError::InvalidParameter("sample contains NaN".into()));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn ks_sorted(v: &[f64], mut cdf_at: impl FnMut(usize) -> f64) -> f64 {
    let n = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        // ties: the empirical CDF jumps once over the whole run
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let f = cdf_at(i);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    d.clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov distance sup |F_n - F|, checking both
/// sides of every jump of the empirical CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(sample)?;
    Ok(ks_sorted(&v, |i| cdf(v[i])))
}

/// As [`ks_distance`] for CDFs that are expensive to evaluate: the CDF is
/// computed exactly at up to `nodes` order statistics and linearly
/// interpolated between them. Exact when the sample has at most `nodes`
/// points; otherwise off by at most the CDF increment between adjacent
/// nodes, about 1/nodes.
pub fn ks_distance_tabulated(sample: &[f64], cdf: impl Fn(f64) -> f64 + Sync, nodes: usize) -> Result<f64> {
    let v = sorted(sample)?;
    let n = v.len();
    let nodes = nodes.clamp(2, n.max(2));
    let idx: Vec<usize> = if n <= nodes {
        (0..n).collect()
    } else {
        let mut idx: Vec<usize> = (0..nodes).map(|k| k * (n - 1) / (nodes - 1)).collect();
        idx.dedup();
        idx
    };
    let vals = map_members(idx.len(), |k| cdf(v[idx[k]]));
    let mut seg = 0;
    Ok(ks_sorted(&v, |i| {
        while seg + 1 < idx.len() && idx[seg + 1] <= i {
            seg += 1;
        }
        if idx[seg] == i || seg + 1 == idx.len() {
            return vals[seg];
        }
        let (x0, x1) = (v[idx[seg]], v[idx[seg + 1]]);
        if x1 == x0 {
            return vals[seg];
        }
        let w = (v[i] - x0) / (x1 - x0);
        vals[seg] + w * (vals[seg + 1] - vals[seg])
    }))
}

/// Two-sample KS distance sup |F_a - F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// √(sample size), capped at 60 and at least 5.
pub fn default_bins(sample_size: usize) -> usize {
    ((sample_size as f64).sqrt().round() as usize).clamp(5, 60)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitTarget {
    Density,
    Spacing,
}

/// Objective and KS of a parameter-free reference curve on the same
/// histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFit {
    pub objective: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub target: FitTarget,
    pub alpha_hat: f64,
    /// Residual sum of squares of histogram heights at `alpha_hat`.
    pub objective: f64,
    pub ks: f64,
    /// Scanned α values and their objectives.
    pub grid: Vec<f64>,
    pub grid_objective: Vec<f64>,
    /// Minimum of the scan sat on the first or last grid point.
    pub at_boundary: bool,
    /// Heights are normalised by the full sample size, so mass above the
    /// last edge is missing from the area.
    pub histogram: DensityHistogram,
    pub sample_size: usize,
    /// Marčenko-Pastur (density) or Wigner surmise (spacing) on the same data.
    pub reference: ReferenceFit,
}

/// Histogram over [0, upper quantile] normalised by the whole sample.
pub fn fit_histogram(values: &[f64], bins: usize) -> Result<DensityHistogram> {
    let v = sorted(values)?;
    let q = v[((v.len() - 1) as f64 * UPPER_QUANTILE).round() as usize];
    let hi = if q > 0.0 { q } else { v[v.len() - 1] };
    let mut h = histogram_density(&v, bins, Some((0.0, hi)))?;
    let scale = h.total_count as f64 / v.len() as f64;
    for y in &mut h.heights {
        *y *= scale;
    }
    Ok(h)
}

fn sum_squares(h: &DensityHistogram, model: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut s = 0.0;
    for (x, y) in h.centers().into_iter().zip(&h.heights) {
        let r = y - model(x)?;
        s += r * r;
    }
    Ok(s)
}

struct Scan {
    alpha_hat: f64,
    objective: f64,
    grid: Vec<f64>,
    grid_objective: Vec<f64>,
    at_boundary: bool,
}

/// Log-grid scan over [ALPHA_MIN, ALPHA_MAX] then golden-section search in
/// ln α between the neighbours of the best grid point.
fn scan_alpha(objective: impl Fn(f64) -> Result<f64> + Sync) -> Result<Scan> {
    let grid = logspace(ALPHA_MIN, ALPHA_MAX, SCAN_POINTS);
    let grid_objective = map_members(grid.len(), |i| objective(grid[i])).into_iter().collect::<Result<Vec<_>>>()?;
    let best = grid_objective
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    if best == 0 || best + 1 == grid.len() {
        return Ok(Scan { alpha_hat: grid[best], objective: grid_objective[best], grid, grid_objective, at_boundary: true });
    }
    let (mut a, mut b) = (grid[best - 1].ln(), grid[best + 1].ln());
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = objective(x1.exp())?;
    let mut f2 = objective(x2.exp())?;
    while b - a > REFINE_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = objective(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = objective(x2.exp())?;
        }
    }
    let (mut alpha_hat, mut obj) = if f1 <= f2 { (x1.exp(), f1) } else { (x2.exp(), f2) };
    if grid_objective[best] < obj {
        alpha_hat = grid[best];
        obj = grid_objective[best];
    }
    Ok(Scan { alpha_hat, objective: obj, grid, grid_objective, at_boundary: false })
}

/// Fits ρ_α to pooled eigenvalues. Values are rescaled to unit mean first
/// (a no-op when already rescaled); `c` is N/T of the underlying matrices.
pub fn fit_alpha_density(values: &[f64], c: f64, bins: Option<usize>) -> Result<FitReport> {
    crate::densities::mp_support(c)?;
    let x = rescale_values_unit_mean(values)?;
    let h = fit_histogram(&x, bins.unwrap_or_else(|| default_bins(x.len())))?;
    let scan = scan_alpha(|a| sum_squares(&h, |xc| generalized_density(xc, c, a)))?;
    let alpha = scan.alpha_hat;
    let ks = ks_distance_tabulated(&x, |v| generalized_cdf(v, c, alpha).unwrap_or(f64::NAN), KS_NODES)?;
    let reference = ReferenceFit {
        objective: sum_squares(&h, |xc| Ok(crate::densities::mp_density(xc, c)))?,
        ks: ks_distance(&x, |v| crate::densities::mp_cdf(v, c).unwrap_or(f64::NAN))?,
    };
    Ok(FitReport {
        target: FitTarget::Density,
        alpha_hat: alpha,
        objective: scan.objective,
        ks,
        grid: scan.grid,
        grid_objective: scan.grid_objective,
        at_boundary: scan.at_boundary,
        histogram: h,
        sample_size: x.len(),
        reference,
    })
}

/// Fits the generalised surmise p_α to a spacing sample (mean ≈ 1).
pub fn fit_alpha_spacing(sp: &SpacingSample, bins: Option<usize>) -> Result<FitReport> {
    let s = &sp.values;
    let h = fit_histogram(s, bins.unwrap_or_else(|| default_bins(s.len())))?;
    let scan = scan_alpha(|a| sum_squares(&h, |x| generalized_surmise(x, a)))?;
    let alpha = scan.alpha_hat;
    let ks = ks_distance_tabulated(s, |v| generalized_surmise_cdf(v, alpha).unwrap_or(f64::NAN), KS_NODES)?;
    let reference = ReferenceFit { objective: sum_squares(&h, |x| Ok(wigner_surmise(x)))?, ks: ks_distance(s, wigner_cdf)? };
    Ok(FitReport {
        target: FitTarget::Spacing,
        alpha_hat: alpha,
        objective: scan.objective,
        ks,
        grid: scan.grid,
        grid_objective: scan.grid_objective,
        at_boundary: scan.at_boundary,
        histogram: h,
        sample_size: s.len(),
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_cdf(x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    #[test]
    fn ks_of_midpoint_quantiles_is_half_over_n() {
        for n in [1usize, 7, 100] {
            let s: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
            let d = ks_distance(&s, uniform_cdf).unwrap();
            assert!((d - 0.5 / n as f64).abs() < 1e-15, "n={n}: {d}");
        }
    }

    #[test]
    fn ks_of_constant_sample() {
        let d = ks_distance(&[0.3; 50], uniform_cdf).unwrap();
        assert!((d - 0.7).abs() < 1e-15);
        assert!(ks_distance(&[], uniform_cdf).is_err());
    }

    #[test]
    fn tabulated_matches_exact() {
        let s: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 5000) as f64 / 5000.0).map(|u: f64| u.sqrt()).collect();
        let f = |x: f64| x.clamp(0.0, 1.0).powi(2);
        let exact = ks_distance(&s, f).unwrap();
        let approx = ks_distance_tabulated(&s, f, 512).unwrap();
        assert!((exact - approx).abs() < 1.0 / 512.0, "{exact} vs {approx}");
        assert_eq!(ks_distance_tabulated(&s[..100], f, 512).unwrap(), ks_distance(&s[..100], f).unwrap());
    }

    #[test]
    fn two_sample_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&a, &[10.0, 11.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[1.5, 2.5]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bin_rule() {
        assert_eq!(default_bins(4), 5);
        assert_eq!(default_bins(400), 20);
        assert_eq!(default_bins(1_000_000), 60);
    }

    #[test]
    fn golden_section_finds_interior_minimum() {
        let scan = scan_alpha(|a| Ok((a.ln() - 3f64.ln()).powi(2))).unwrap();
        assert!(!scan.at_boundary);
        assert!((scan.alpha_hat / 3.0 - 1.0).abs() < 1e-3, "{}", scan.alpha_hat);
        let edge = scan_alpha(|a| Ok(1.0 / a)).unwrap();
        assert!(edge.at_boundary && (edge.alpha_hat / ALPHA_MAX - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_histogram_counts_tail_mass() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let h = fit_histogram(&v, 10).unwrap();
        assert!(h.area() < 1.0 && h.area() > 0.99);
    }

    proptest! {
        #[test]
        fn ks_in_unit_interval(s in prop::collection::vec(-1.0f64..2.0, 1..60)) {
            let d = ks_distance(&s, uniform_cdf).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn ks_order_invariant(mut s in prop::collection::vec(0.0f64..1.0, 1..60)) {
            let d = ks_distance(&s, uniform_cdf).unwrap();
            s.reverse();
            prop_assert_eq!(d, ks_distance(&s, uniform_cdf).unwrap());
        }
    }
}
