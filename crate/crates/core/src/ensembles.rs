//! Seeded samplers for the Wishart-Laguerre ensemble and its power-law
//! generalisation.
//!
//! Every ensemble member draws from its own ChaCha stream, selected by the
//! member index, so results are identical whether members are generated
//! sequentially or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, RmtError};
use crate::linalg::Matrix;
use crate::spectra::{spectrum_of_data, Spectrum};

/// Gaussian ensemble with density ∝ exp(-σ² Tr XᵀX).
///
/// Samples always use unit-variance entries; `sigma` is carried for
/// bookkeeping only since every comparison rescales to unit mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WLParams {
    pub n: usize,
    pub t: usize,
    pub sigma: f64,
}

impl WLParams {
    pub fn new(n: usize, t: usize) -> Result<Self> {
        let p = Self { n, t, sigma: std::f64::consts::FRAC_1_SQRT_2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t <= self.n {
            return Err(invalid(format!("need t > n >= 1, got n={}, t={}", self.n, self.t)));
        }
        if !(self.sigma > 0.0) {
            return Err(invalid("sigma must be positive"));
        }
        Ok(())
    }
}

/// Power-law ensemble with density ∝ (1 + Tr XᵀX / ν)^{-ν},
/// ν = α + NT/2 + 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    pub t: usize,
    pub alpha: f64,
}

impl GenParams {
    pub fn new(n: usize, t: usize, alpha: f64) -> Result<Self> {
        let p = Self { n, t, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t <= self.n {
            return Err(invalid(format!("need t > n >= 1, got n={}, t={}", self.n, self.t)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn nu(&self) -> f64 {
        self.alpha + 0.5 * (self.n * self.t) as f64 + 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SampledWl,
    SampledGeneralised,
    ChoppedMethod1,
    ChoppedMethod2,
}

/// Spectra sharing one (n, t) shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraEnsemble {
    pub spectra: Vec<Spectrum>,
    pub provenance: Provenance,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
}

impl SpectraEnsemble {
    pub fn new(spectra: Vec<Spectrum>, provenance: Provenance, seed: u64) -> Result<Self> {
        let first = spectra.first().ok_or(RmtError::Empty("ensemble has no spectra"))?;
        let (n, t) = (first.n_assets, first.t_window);
        if let Some(bad) = spectra.iter().position(|s| s.n_assets != n || s.t_window != t) {
            return Err(RmtError::Shape(format!(
                "member {bad} has shape ({}, {}), expected ({n}, {t})",
                spectra[bad].n_assets, spectra[bad].t_window
            )));
        }
        Ok(Self { spectra, provenance, seed, n, t })
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    /// All eigenvalues of all members, in member order.
    pub fn pooled(&self) -> Vec<f64> {
        self.spectra.iter().flat_map(|s| s.lambdas.iter().copied()).collect()
    }

    /// Pooled eigenvalues divided by their common mean. Members are not
    /// rescaled individually, so scale fluctuations between members (the
    /// source of power-law tails) are preserved.
    pub fn pooled_unit_mean(&self) -> Vec<f64> {
        let v = self.pooled();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.into_iter().map(|x| x / mean).collect()
    }

    /// The k-th smallest eigenvalue (0-based) of every member.
    pub fn order_statistic(&self, k: usize) -> Vec<f64> {
        self.spectra.iter().map(|s| s.lambdas[k]).collect()
    }

    pub fn smallest(&self) -> Vec<f64> {
        self.order_statistic(0)
    }

    pub fn largest(&self) -> Vec<f64> {
        self.order_statistic(self.n - 1)
    }
}

/// Independent stream for ensemble member `index`.
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_matrix<R: Rng>(rng: &mut R, t: usize, n: usize, sd: f64) -> Matrix {
    let data = (0..t * n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect();
    Matrix::from_row_major(t, n, data).expect("sized buffer")
}

pub(crate) fn map_members<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// `count` spectra of W = (1/T)XᵀX with i.i.d. standard normal entries.
pub fn sample_wishart(p: &WLParams, count: usize, seed: u64) -> Result<SpectraEnsemble> {
    p.validate()?;
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    let spectra = map_members(count, |i| {
        let mut rng = member_rng(seed, i as u64);
        spectrum_of_data(&gaussian_matrix(&mut rng, p.t, p.n, 1.0))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    SpectraEnsemble::new(spectra, Provenance::SampledWl, seed)
}

/// One draw of the data matrix of the power-law ensemble.
///
/// Uses the Gaussian scale mixture: with g ~ Gamma(α+1, 1) and ξ = g/ν the
/// entries are i.i.d. N(0, 1/(2ξ)). Integrating out g against the Gaussian
/// normaliser ξ^{NT/2} gives exactly (1 + Tr XᵀX / ν)^{-ν}.
pub fn sample_generalized_matrix<R: Rng>(p: &GenParams, rng: &mut R) -> Matrix {
    let gamma = Gamma::new(p.alpha + 1.0, 1.0).expect("validated shape");
    let g: f64 = gamma.sample(rng);
    let xi = g / p.nu();
    gaussian_matrix(rng, p.t, p.n, (0.5 / xi).sqrt())
}

pub fn sample_generalized(p: &GenParams, count: usize, seed: u64) -> Result<SpectraEnsemble> {
    p.validate()?;
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    let spectra = map_members(count, |i| {
        let mut rng = member_rng(seed, i as u64);
        spectrum_of_data(&sample_generalized_matrix(p, &mut rng))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    SpectraEnsemble::new(spectra, Provenance::SampledGeneralised, seed)
}
