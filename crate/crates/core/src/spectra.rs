//! Covariance matrices, their spectra and normalised histograms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, RmtError};
use crate::ingest::ReturnPanel;
use crate::linalg::{symmetric_eigen, Matrix};

/// C = (1/T) XᵀX for a T×N data matrix.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub c: Matrix,
    pub t_used: usize,
}

impl CovarianceMatrix {
    /// Covariance of an arbitrary T×N data matrix (no normalisation).
    pub fn from_data(x: &Matrix) -> Result<Self> {
        if x.rows() < 1 {
            return Err(RmtError::Empty("data matrix has no rows"));
        }
        Ok(Self { c: x.gram(1.0 / x.rows() as f64), t_used: x.rows() })
    }

    pub fn dim(&self) -> usize {
        self.c.rows()
    }
}

pub fn covariance_from_panel(rp: &ReturnPanel) -> Result<CovarianceMatrix> {
    if rp.n_times() < 2 {
        return Err(invalid(format!("need T >= 2 rows, got {}", rp.n_times())));
    }
    CovarianceMatrix::from_data(&rp.x)
}

/// Ascending eigenvalues of one covariance matrix with its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub lambdas: Vec<f64>,
    pub n_assets: usize,
    pub t_window: usize,
    /// Smallest eigenvalue before clamping round-off negatives to zero.
    #[serde(default)]
    pub raw_min: f64,
}

impl Spectrum {
    /// Sorts `lambdas` ascending; negative values are clamped to zero.
    pub fn new(mut lambdas: Vec<f64>, t_window: usize) -> Self {
        lambdas.sort_by(f64::total_cmp);
        let raw_min = lambdas.first().copied().unwrap_or(0.0);
        for l in &mut lambdas {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        let n_assets = lambdas.len();
        Self { lambdas, n_assets, t_window, raw_min }
    }

    pub fn c_ratio(&self) -> f64 {
        self.n_assets as f64 / self.t_window as f64
    }

    pub fn mean(&self) -> f64 {
        self.lambdas.iter().sum::<f64>() / self.lambdas.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn max(&self) -> f64 {
        self.lambdas[self.lambdas.len() - 1]
    }
}

/// Full ascending spectrum of a symmetric matrix.
pub fn eigenvalues_sym(cov: &CovarianceMatrix) -> Result<Spectrum> {
    Ok(eigen_checked(cov, false)?.0)
}

/// As [`eigenvalues_sym`], also returning the reconstruction residual
/// max|C - QΛQᵀ|.
pub fn eigenvalues_validated(cov: &CovarianceMatrix) -> Result<(Spectrum, f64)> {
    let (s, r) = eigen_checked(cov, true)?;
    Ok((s, r.unwrap_or(f64::NAN)))
}

fn eigen_checked(cov: &CovarianceMatrix, vectors: bool) -> Result<(Spectrum, Option<f64>)> {
    let (gap, i, j) = cov.c.asymmetry();
    if gap > 1e-12 * cov.c.max_abs().max(1.0) {
        return Err(RmtError::NotSymmetric { i, j, gap });
    }
    let n = cov.dim();
    let eig = symmetric_eigen(&cov.c, vectors)?;
    let residual = eig.reconstruction_residual(&cov.c);
    let floor = -1e-10 * (n as f64).max(1.0) * cov.c.max_abs().max(1.0);
    if let Some(&lo) = eig.values.first() {
        if lo < floor {
            return Err(invalid(format!("matrix is not positive semidefinite (eigenvalue {lo:e})")));
        }
    }
    Ok((Spectrum::new(eig.values, cov.t_used), residual))
}

/// Spectrum of (1/T)XᵀX for a data matrix.
pub fn spectrum_of_data(x: &Matrix) -> Result<Spectrum> {
    eigenvalues_sym(&CovarianceMatrix::from_data(x)?)
}

/// Divides every eigenvalue by the spectrum mean.
pub fn rescale_unit_mean(s: &Spectrum) -> Result<Spectrum> {
    let mean = s.mean();
    if !(mean > 0.0) {
        return Err(invalid("spectrum has nonpositive mean"));
    }
    let mut out = s.clone();
    for l in &mut out.lambdas {
        *l /= mean;
    }
    Ok(out)
}

/// Divides every value by the pooled mean.
pub fn rescale_values_unit_mean(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(RmtError::Empty("no values to rescale"));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if !(mean > 0.0) {
        return Err(invalid("values have nonpositive mean"));
    }
    Ok(values.iter().map(|v| v / mean).collect())
}

/// Equal-width histogram normalised as a probability density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub bin_edges: Vec<f64>,
    pub heights: Vec<f64>,
    /// Number of values that fell inside the binned range.
    pub total_count: usize,
}

impl DensityHistogram {
    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn area(&self) -> f64 {
        self.heights.iter().sum::<f64>() * self.bin_width()
    }
}

/// heights = count / (total · width) over [min, max] or the given range.
/// Values outside an explicit range are ignored; the last bin is closed.
pub fn histogram_density(values: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<DensityHistogram> {
    if values.is_empty() {
        return Err(RmtError::Empty("histogram input"));
    }
    if bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    });
    if !(hi > lo) {
        return Err(invalid(format!("zero-width histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v < lo || v > hi || v.is_nan() {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(RmtError::Empty("no values inside histogram range"));
    }
    let bin_edges = (0..=bins).map(|k| if k == bins { hi } else { lo + width * k as f64 }).collect();
    let norm = total as f64 * width;
    Ok(DensityHistogram { bin_edges, heights: counts.iter().map(|&c| c as f64 / norm).collect(), total_count: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::return_panel_from_matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(t: usize, n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_row_major(t, n, (0..t * n).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap()
    }

    #[test]
    fn covariance_examples() {
        let rp = return_panel_from_matrix(&Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap()).unwrap();
        let c = covariance_from_panel(&rp).unwrap();
        assert_eq!(c.c.as_slice(), &[1.0]);

        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, -1.0], vec![2.0, 2.0]]).unwrap();
        let rp = return_panel_from_matrix(&x).unwrap();
        let c = covariance_from_panel(&rp).unwrap();
        for v in c.c.as_slice() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_panel_trace_and_diagonal() {
        let rp = return_panel_from_matrix(&random_matrix(60, 20, 3)).unwrap();
        let c = covariance_from_panel(&rp).unwrap();
        let trace: f64 = (0..20).map(|i| c.c[(i, i)]).sum();
        assert!((trace - 20.0).abs() < 1e-8);
        for i in 0..20 {
            assert!((c.c[(i, i)] - 1.0).abs() < 1e-10);
        }
        let (s, residual) = eigenvalues_validated(&c).unwrap();
        assert!((s.lambdas.iter().sum::<f64>() - 20.0).abs() < 1e-8);
        assert!(residual < 1e-9 * 20.0);
        assert_eq!(s.n_assets, 20);
        assert_eq!(s.t_window, 60);
    }

    #[test]
    fn eigen_examples() {
        let id = CovarianceMatrix { c: Matrix::identity(3), t_used: 3 };
        assert_eq!(eigenvalues_sym(&id).unwrap().lambdas, vec![1.0; 3]);
        let ones = CovarianceMatrix { c: Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap(), t_used: 2 };
        let s = eigenvalues_sym(&ones).unwrap();
        assert!(s.lambdas[0].abs() < 1e-15 && (s.lambdas[1] - 2.0).abs() < 1e-15);
        assert!(s.lambdas[0] >= 0.0);
    }

    #[test]
    fn rejects_asymmetric() {
        let c = CovarianceMatrix { c: Matrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).unwrap(), t_used: 2 };
        assert!(matches!(eigenvalues_sym(&c), Err(RmtError::NotSymmetric { .. })));
    }

    #[test]
    fn rescale_examples() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0], 10);
        assert_eq!(rescale_unit_mean(&s).unwrap().lambdas, vec![0.5, 1.0, 1.5]);
        let once = rescale_unit_mean(&s).unwrap();
        assert_eq!(rescale_unit_mean(&once).unwrap(), once);
        assert!(rescale_unit_mean(&Spectrum::new(vec![0.0, 0.0], 3)).is_err());
    }

    #[test]
    fn histogram_examples() {
        let h = histogram_density(&[0.0, 1.0], 2, None).unwrap();
        assert_eq!(h.bin_edges, vec![0.0, 0.5, 1.0]);
        assert_eq!(h.heights, vec![1.0, 1.0]);
        assert!(histogram_density(&[], 3, None).is_err());
        assert!(histogram_density(&[2.0, 2.0], 3, None).is_err());
        assert!(histogram_density(&[1.0], 0, Some((0.0, 2.0))).is_err());
    }

    #[test]
    fn uniform_histogram_is_flat() {
        // binomial sd of a height is sqrt(20/1e5) ≈ 0.014, so 0.05 is > 3.5 sd
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let h = histogram_density(&v, 20, Some((0.0, 1.0))).unwrap();
        assert!(h.heights.iter().all(|y| (y - 1.0).abs() < 0.05));
    }

    proptest! {
        #[test]
        fn histogram_has_unit_area(v in prop::collection::vec(-100.0f64..100.0, 2..300), bins in 1usize..50) {
            prop_assume!(v.iter().any(|x| *x != v[0]));
            let h = histogram_density(&v, bins, None).unwrap();
            prop_assert!((h.area() - 1.0).abs() < 1e-10);
            prop_assert_eq!(h.total_count, v.len());
        }

        #[test]
        fn spectrum_invariant_under_permutations(seed in 0u64..500, shift in 1usize..7) {
            let x = random_matrix(15, 6, seed);
            let base = spectrum_of_data(&x).unwrap();
            let rows: Vec<usize> = (0..15).map(|i| (i + shift) % 15).collect();
            let mut xr = Matrix::zeros(15, 6);
            for (i, &r) in rows.iter().enumerate() {
                for j in 0..6 {
                    xr[(i, j)] = x[(r, j)];
                }
            }
            let cols: Vec<usize> = (0..6).map(|j| (j + shift) % 6).collect();
            let xc = x.select_columns(&cols);
            let sr = spectrum_of_data(&xr).unwrap();
            let sc = spectrum_of_data(&xc).unwrap();
            for k in 0..6 {
                prop_assert!((sr.lambdas[k] - base.lambdas[k]).abs() < 1e-10);
                prop_assert!((sc.lambdas[k] - base.lambdas[k]).abs() < 1e-10);
            }
            let tr = CovarianceMatrix::from_data(&x).unwrap().c.trace();
            prop_assert!((tr - base.lambdas.iter().sum::<f64>()).abs() < 1e-8 * 6.0);
        }

        #[test]
        fn rescale_commutes_with_sorting(v in prop::collection::vec(0.01f64..10.0, 1..40)) {
            let sorted = Spectrum::new(v.clone(), 50);
            let mut reversed = v.clone();
            reversed.reverse();
            let a = rescale_unit_mean(&sorted).unwrap();
            let b = rescale_unit_mean(&Spectrum::new(reversed, 50)).unwrap();
            prop_assert_eq!(a.lambdas.len(), b.lambdas.len());
            for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((a.mean() - 1.0).abs() < 1e-12);
        }
    }
}
