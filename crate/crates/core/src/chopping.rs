//! Ensembles carved out of one long return panel.
//!
//! Method 1 cuts time into ℓ = ⌊T/t⌋ disjoint windows over all N assets.
//! Method 2 additionally cuts the assets into k = ⌊N/n⌋ contiguous blocks,
//! giving k·ℓ matrices of shape (n, t). Remainders are discarded. Output is
//! ordered window-major, then block.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ensembles::{map_members, member_rng, Provenance, SpectraEnsemble};
use crate::error::{invalid, Result, RmtError};
use crate::fitting::ks_two_sample;
use crate::ingest::{normalize_returns, ReturnPanel};
use crate::linalg::Matrix;
use crate::spectra::{spectrum_of_data, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChopConfig {
    pub t_window: usize,
    /// Asset block size; Method 2 only.
    pub n_block: Option<usize>,
    pub seed: u64,
    pub renormalize_per_window: bool,
}

impl ChopConfig {
    pub fn method1(t_window: usize) -> Self {
        Self { t_window, n_block: None, seed: 0, renormalize_per_window: true }
    }

    pub fn method2(t_window: usize, n_block: usize) -> Self {
        Self { t_window, n_block: Some(n_block), seed: 0, renormalize_per_window: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_window < 2 {
            return Err(invalid(format!("window length {} below 2", self.t_window)));
        }
        if self.n_block == Some(0) {
            return Err(invalid("asset block size must be at least 1"));
        }
        Ok(())
    }

    /// Advisory notes on the shape; 1/c = t/n should be of order 10.
    pub fn warnings(&self, n_assets: usize) -> Vec<String> {
        let n = self.n_block.unwrap_or(n_assets);
        let mut w = Vec::new();
        if n >= self.t_window {
            w.push(format!("block size {n} not below window length {}: spectra contain exact zeros", self.t_window));
        } else {
            let inv_c = self.t_window as f64 / n as f64;
            if !(2.0..=50.0).contains(&inv_c) {
                w.push(format!("t/n = {inv_c:.3} is far from the order-10 regime"));
            }
        }
        w
    }
}

fn sub_spectrum(rp: &ReturnPanel, row0: usize, col0: usize, t: usize, n: usize, renormalize: bool) -> Result<Spectrum> {
    let block: Matrix = rp.x.block(row0, col0, t, n);
    if renormalize {
        let ids = &rp.asset_ids[col0..col0 + n];
        let sub = normalize_returns(&block, ids).map_err(|e| match e {
            RmtError::ZeroVariance(id) => RmtError::ZeroVariance(format!("{id} in window starting at row {row0}")),
            other => other,
        })?;
        spectrum_of_data(&sub.x)
    } else {
        spectrum_of_data(&block)
    }
}

fn chop(rp: &ReturnPanel, cfg: &ChopConfig, n: usize, provenance: Provenance) -> Result<SpectraEnsemble> {
    cfg.validate()?;
    let t = cfg.t_window;
    let windows = rp.n_times() / t;
    let blocks = rp.n_assets() / n;
    if windows * blocks == 0 {
        return Err(invalid(format!(
            "panel {}x{} yields no {t}x{n} submatrices",
            rp.n_times(),
            rp.n_assets()
        )));
    }
    let spectra = map_members(windows * blocks, |i| {
        let (w, b) = (i / blocks, i % blocks);
        sub_spectrum(rp, w * t, b * n, t, n, cfg.renormalize_per_window)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    SpectraEnsemble::new(spectra, provenance, cfg.seed)
}

/// Time windows over all assets: ⌊T/t⌋ spectra of shape (N, t).
pub fn chop_method1(rp: &ReturnPanel, cfg: &ChopConfig) -> Result<SpectraEnsemble> {
    chop(rp, cfg, rp.n_assets(), Provenance::ChoppedMethod1)
}

/// Time windows × asset blocks: ⌊T/t⌋·⌊N/n⌋ spectra of shape (n, t).
pub fn chop_method2(rp: &ReturnPanel, cfg: &ChopConfig) -> Result<SpectraEnsemble> {
    let n = cfg.n_block.ok_or_else(|| invalid("method 2 needs an asset block size"))?;
    chop(rp, cfg, n, Provenance::ChoppedMethod2)
}

/// Pairwise two-sample KS distances of one extreme-eigenvalue statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticComparison {
    pub statistic: String,
    /// Row-major, ensembles × ensembles, zero diagonal.
    pub pairwise_ks: Vec<Vec<f64>>,
    pub max_ks: f64,
    pub mean_ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub n_ensembles: usize,
    pub ensemble_size: usize,
    pub seed: u64,
    pub include_identity: bool,
    pub comparisons: Vec<StatisticComparison>,
}

#[derive(Debug, Clone)]
pub struct PermutationStudy {
    pub ensembles: Vec<SpectraEnsemble>,
    /// Asset order used for each ensemble.
    pub orders: Vec<Vec<usize>>,
    pub report: ConsistencyReport,
}

fn compare(name: &str, samples: &[Vec<f64>]) -> Result<StatisticComparison> {
    let m = samples.len();
    let mut ks = vec![vec![0.0; m]; m];
    let (mut max, mut sum, mut pairs) = (0.0f64, 0.0, 0usize);
    for i in 0..m {
        for j in i + 1..m {
            let d = ks_two_sample(&samples[i], &samples[j])?;
            ks[i][j] = d;
            ks[j][i] = d;
            max = max.max(d);
            sum += d;
            pairs += 1;
        }
    }
    let mean = if pairs > 0 { sum / pairs as f64 } else { 0.0 };
    Ok(StatisticComparison { statistic: name.into(), pairwise_ks: ks, max_ks: max, mean_ks: mean })
}

/// Method 2 under `n_ensembles` random asset orders, drawn from the
/// per-ensemble stream of `seed`. With `include_identity` ensemble 0 uses
/// the given order. The report compares the smallest, second smallest,
/// second largest and largest eigenvalues across ensembles.
pub fn permuted_choppings(
    rp: &ReturnPanel,
    cfg: &ChopConfig,
    n_ensembles: usize,
    seed: u64,
    include_identity: bool,
) -> Result<PermutationStudy> {
    if n_ensembles == 0 {
        return Err(invalid("need at least one ensemble"));
    }
    let n_assets = rp.n_assets();
    let orders: Vec<Vec<usize>> = (0..n_ensembles)
        .map(|i| {
            let mut order: Vec<usize> = (0..n_assets).collect();
            if !(include_identity && i == 0) {
                order.shuffle(&mut member_rng(seed, i as u64));
            }
            order
        })
        .collect();
    let cfg = ChopConfig { seed, ..*cfg };
    let ensembles = orders.iter().map(|o| chop_method2(&rp.permute_assets(o), &cfg)).collect::<Result<Vec<_>>>()?;
    let n = ensembles[0].n;
    let mut comparisons = Vec::new();
    let stats: [(&str, usize); 4] =
        [("smallest", 0), ("second-smallest", 1), ("second-largest", n.saturating_sub(2)), ("largest", n - 1)];
    for (name, k) in stats {
        if k >= n || (n < 2 && k > 0) {
            continue;
        }
        let samples: Vec<Vec<f64>> = ensembles.iter().map(|e| e.order_statistic(k)).collect();
        comparisons.push(compare(name, &samples)?);
    }
    let report = ConsistencyReport {
        n_ensembles,
        ensemble_size: ensembles[0].len(),
        seed,
        include_identity,
        comparisons,
    };
    Ok(PermutationStudy { ensembles, orders, report })
}
