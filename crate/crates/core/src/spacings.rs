//! Nearest-neighbour spacing laws and individual spacings of ensembles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{CurveKind, TheoryCurve};
use crate::ensembles::SpectraEnsemble;
use crate::error::{invalid, Result, RmtError};
use crate::quadrature::gamma_gaussian_expectation;

const REL_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingKind {
    IndividualK,
    GlobalUnfolded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSample {
    pub values: Vec<f64>,
    pub kind: SpacingKind,
    /// Gap index for individual spacings.
    pub k_index: Option<usize>,
}

impl SpacingSample {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// β = 1 Wigner surmise (π/2) s exp(-π s²/4).
pub fn wigner_surmise(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

pub fn wigner_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        -(-0.25 * PI * s * s).exp_m1()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("alpha = {alpha} must be positive")))
    }
}

/// Generalised surmise
///
/// p_α(s) = πs / (2α²Γ(α+1)) ∫₀^∞ t^{α+2} exp(-t - πt²s²/(4α²)) dt,
///
/// evaluated as πs(α+1)(α+2)/(2α²) · E[exp(-πs²t²/(4α²))] with
/// t ~ Gamma(α+3).
pub fn generalized_surmise(s: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if s <= 0.0 {
        return Ok(0.0);
    }
    let beta = PI * s * s / (4.0 * alpha * alpha);
    let e = gamma_gaussian_expectation(alpha + 3.0, beta, REL_TOL)?;
    Ok(PI * s * (alpha + 1.0) * (alpha + 2.0) / (2.0 * alpha * alpha) * e)
}

/// Distribution function 1 - E[exp(-πs²t²/(4α²))], t ~ Gamma(α+1), i.e.
/// the Wigner CDF averaged over the same scale mixture.
pub fn generalized_surmise_cdf(s: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if s <= 0.0 {
        return Ok(0.0);
    }
    let beta = PI * s * s / (4.0 * alpha * alpha);
    Ok((1.0 - gamma_gaussian_expectation(alpha + 1.0, beta, REL_TOL)?).clamp(0.0, 1.0))
}

pub fn tabulate_wigner(ss: &[f64]) -> TheoryCurve {
    TheoryCurve::new(CurveKind::WdSpacing, &[], ss.to_vec(), ss.iter().map(|&s| wigner_surmise(s)).collect())
}

pub fn tabulate_generalized_surmise(alpha: f64, ss: &[f64]) -> Result<TheoryCurve> {
    let ys = ss.iter().map(|&s| generalized_surmise(s, alpha)).collect::<Result<Vec<_>>>()?;
    Ok(TheoryCurve::new(CurveKind::GenSpacing, &[("alpha", alpha)], ss.to_vec(), ys))
}

/// Individual spacings s_k = (λ_k - λ_{k-1}) / ⟨λ_k - λ_{k-1}⟩.
///
/// Gaps are numbered 1..=N-1; gap k lies between the sorted eigenvalues
/// with 0-based indices k-1 and k.
pub fn individual_spacings(e: &SpectraEnsemble, k: usize) -> Result<SpacingSample> {
    if k == 0 || k >= e.n {
        return Err(invalid(format!("gap index {k} outside 1..={}", e.n.saturating_sub(1))));
    }
    if e.len() < 2 {
        return Err(invalid("individual spacings need at least two ensemble members"));
    }
    let gaps: Vec<f64> = e.spectra.iter().map(|s| s.lambdas[k] - s.lambdas[k - 1]).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if !(mean > 0.0) {
        return Err(RmtError::Degenerate(format!("mean gap {mean} at k = {k}")));
    }
    Ok(SpacingSample { values: gaps.iter().map(|g| g / mean).collect(), kind: SpacingKind::IndividualK, k_index: Some(k) })
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
    fn wigner_values() {
        assert_eq!(wigner_surmise(0.0), 0.0);
        assert!((wigner_surmise(1.0) - 0.716_185_936_340_569).abs() < 1e-14);
        let mode = (2.0 / PI).sqrt();
        let h = 1e-6;
        assert!(wigner_surmise(mode) > wigner_surmise(mode - h));
        assert!(wigner_surmise(mode) > wigner_surmise(mode + h));
        assert!((mode - 0.797_884_560_8).abs() < 1e-9);
    }

    #[test]
    fn generalized_vanishes_at_zero() {
        for &a in &[0.1, 1.0, 30.0] {
            assert_eq!(generalized_surmise(0.0, a).unwrap(), 0.0);
        }
        assert!(generalized_surmise(1.0, 0.0).is_err());
    }

    #[test]
    fn generalized_cdf_is_integral_of_density() {
        let alpha = 2.5;
        let s1 = 1.7;
        let v = crate::quadrature::composite(0.0, s1, 40, |s| generalized_surmise(s, alpha).unwrap());
        assert!((v - generalized_surmise_cdf(s1, alpha).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn large_alpha_recovers_wigner() {
        let worst = (0..=500)
            .map(|i| {
                let s = i as f64 * 0.01;
                (generalized_surmise(s, 1e3).unwrap() - wigner_surmise(s)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 5e-3, "sup distance {worst}");
    }

    #[test]
    fn individual_spacing_arithmetic() {
        let e = ensemble(&[&[1.0, 2.0, 4.0], &[1.0, 3.0, 5.0]]);
        let s = individual_spacings(&e, 1).unwrap();
        assert!((s.values[0] - 2.0 / 3.0).abs() < 1e-15 && (s.values[1] - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.mean() - 1.0).abs() < 1e-12);
        assert_eq!(s.k_index, Some(1));
    }

    #[test]
    fn individual_spacing_errors() {
        let e = ensemble(&[&[1.0, 2.0, 4.0], &[1.0, 3.0, 5.0]]);
        assert!(individual_spacings(&e, 0).is_err());
        assert!(individual_spacings(&e, 3).is_err());
        let flat = ensemble(&[&[1.0, 1.0], &[2.0, 2.0]]);
        assert!(matches!(individual_spacings(&flat, 1), Err(RmtError::Degenerate(_))));
        let single = ensemble(&[&[1.0, 2.0]]);
        assert!(individual_spacings(&single, 1).is_err());
    }

    #[test]
    fn individual_spacings_scale_invariant() {
        let e = ensemble(&[&[0.3, 1.1, 2.0, 2.4], &[0.2, 0.9, 1.5, 3.3], &[0.1, 0.5, 1.9, 2.2]]);
        let mut scaled = e.clone();
        for s in &mut scaled.spectra {
            for l in &mut s.lambdas {
                *l *= 8.0;
            }
        }
        for k in 1..4 {
            assert_eq!(individual_spacings(&e, k).unwrap(), individual_spacings(&scaled, k).unwrap());
        }
    }
}
