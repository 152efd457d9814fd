//! Random-matrix spectral statistics for financial return panels.
//!
//! The crate compares empirical covariance spectra against the Gaussian
//! Wishart-Laguerre ensemble and its heavy-tailed generalisation:
//!
//! - [`ingest`]: price panels to normalised log-returns
//! - [`spectra`]: covariance matrices, eigenvalues, density histograms
//! - [`ensembles`]: seeded samplers for both ensembles
//! - [`densities`]: Marčenko-Pastur and power-law global densities
//! - [`spacings`]: Wigner surmise, its generalisation, individual spacings
//! - [`tracy_widom`]: Painlevé II, the F₁ law and edge rescaling
//! - [`unfolding`]: polynomial unfolding of pooled spectra
//! - [`chopping`]: ensembles carved out of one long panel
//! - [`fitting`]: tail-parameter fits and Kolmogorov-Smirnov distances

// `!(x > 0.0)` is deliberate: NaN has to fail every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chopping;
pub mod curve;
pub mod densities;
pub mod ensembles;
pub mod error;
pub mod fitting;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod spacings;
pub mod special;
pub mod spectra;
pub mod tracy_widom;
pub mod unfolding;

pub use error::{Result, RmtError};
