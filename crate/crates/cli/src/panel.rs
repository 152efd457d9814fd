//! Panel loading and the synthetic stand-in used when no data is given.

use anyhow::{bail, Context, Result};
use rand_distr::{Distribution, Gamma, StandardNormal};
use rmt_core::ensembles::member_rng;
use rmt_core::ingest::{
    compute_log_returns, load_price_panel, load_return_table, normalize_returns, DroppedAsset, FormatOptions,
    ReturnPanel,
};
use rmt_core::linalg::Matrix;

use crate::args::{InputKind, PanelArgs};

/// Stream reserved for synthetic panels, away from per-member streams.
const PANEL_STREAM: u64 = u64::MAX - 1;

pub struct LoadedPanel {
    pub returns: ReturnPanel,
    /// One per return row.
    pub timestamps: Vec<String>,
    pub dropped: Vec<DroppedAsset>,
}

pub fn format_options(p: &PanelArgs) -> Result<FormatOptions> {
    let delimiter = match p.delimiter {
        Some(c) if c.is_ascii() => Some(c as u8),
        Some(c) => bail!("delimiter {c:?} is not ASCII"),
        None => None,
    };
    Ok(FormatOptions { delimiter, drop_incomplete: p.drop_incomplete, ..Default::default() })
}

pub fn load(p: &PanelArgs) -> Result<LoadedPanel> {
    let path = p.input.as_ref().context("missing --input")?;
    let opts = format_options(p)?;
    match p.input_kind {
        InputKind::Prices => {
            let prices = load_price_panel(path, &opts)?;
            let g = compute_log_returns(&prices)?;
            let returns = normalize_returns(&g, &prices.asset_ids)?;
            Ok(LoadedPanel { returns, timestamps: prices.timestamps[1..].to_vec(), dropped: prices.dropped })
        }
        InputKind::Returns => {
            let (returns, timestamps) = load_return_table(path, &opts)?;
            Ok(LoadedPanel { returns, timestamps, dropped: Vec::new() })
        }
    }
}

/// T×N Gaussian returns whose volatility jumps every `block` rows to
/// g^{-1/2}, g ~ Gamma(α+1, 1), shared by all assets. The common random
/// scale is what fattens the tail of the spectrum.
pub fn synthetic(t: usize, n: usize, block: usize, alpha: f64, seed: u64) -> Result<ReturnPanel> {
    if t < 2 || n == 0 || block == 0 {
        bail!("synthetic panel needs t >= 2, n >= 1 and a positive block length");
    }
    let gamma = Gamma::new(alpha + 1.0, 1.0).with_context(|| format!("synthetic alpha {alpha}"))?;
    let mut rng = member_rng(seed, PANEL_STREAM);
    let mut m = Matrix::zeros(t, n);
    let mut sd = 1.0;
    for i in 0..t {
        if i % block == 0 {
            let g: f64 = gamma.sample(&mut rng);
            sd = g.sqrt().recip();
        }
        for j in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            m[(i, j)] = sd * z;
        }
    }
    let ids: Vec<String> = (0..n).map(|j| format!("S{j:03}")).collect();
    Ok(normalize_returns(&m, &ids)?)
}

/// Plain i.i.d. Gaussian panel (no volatility regimes).
pub fn gaussian(t: usize, n: usize, seed: u64) -> Result<ReturnPanel> {
    let mut rng = member_rng(seed, PANEL_STREAM);
    let data = (0..t * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let m = Matrix::from_row_major(t, n, data)?;
    let ids: Vec<String> = (0..n).map(|j| format!("S{j:03}")).collect();
    Ok(normalize_returns(&m, &ids)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_normalised_and_seeded() {
        let a = synthetic(60, 5, 10, 1.0, 3).unwrap();
        let b = synthetic(60, 5, 10, 1.0, 3).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!((a.n_times(), a.n_assets()), (60, 5));
        for j in 0..5 {
            let (m, s) = rmt_core::ingest::column_moments(&a.x, j);
            assert!(m.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        }
        assert_ne!(synthetic(60, 5, 10, 1.0, 4).unwrap().x, a.x);
    }

    #[test]
    fn bad_shapes_are_rejected() {
        assert!(synthetic(1, 5, 10, 1.0, 0).is_err());
        assert!(synthetic(10, 5, 0, 1.0, 0).is_err());
        assert!(synthetic(10, 5, 2, -2.0, 0).is_err());
    }
}
