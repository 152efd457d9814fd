//! `analyze` recipes: each one runs a whole pipeline into
//! `<out-dir>/<recipe>/`. Sizes have fixed defaults and can
//! be shrunk with --count, --n, --t and friends.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use rmt_core::chopping::{chop_method1, chop_method2};
use rmt_core::curve::{linspace, logspace, trapezoid};
use rmt_core::ensembles::{sample_generalized, sample_wishart, GenParams, WLParams};
use rmt_core::fitting::{fit_alpha_density, fit_alpha_spacing};
use rmt_core::ingest::ReturnPanel;
use rmt_core::spacings::{generalized_surmise, individual_spacings, wigner_surmise};
use rmt_core::spectra::{covariance_from_panel, eigenvalues_validated, rescale_unit_mean};
use rmt_core::tracy_widom::{rescale_extremes, wl_scaling_constants, Edge, TracyWidom};
use rmt_core::unfolding::{unfold_spacings, UnfoldConfig};

use crate::args::{AnalyzeArgs, Recipe};
use crate::commands::{self, check_solver, write_fit, write_individual, write_rescaled, write_unfolded};
use crate::manifest::Run;
use crate::panel;

pub fn name(r: Recipe) -> String {
    r.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

pub fn run_recipe(run: &mut Run, r: Recipe, a: &AnalyzeArgs) -> Result<()> {
    let dir = PathBuf::from(name(r));
    match r {
        Recipe::FigSpacingGen => spacing_gen(run, a, dir),
        Recipe::FigTwMc => tw_mc(run, a, dir),
        Recipe::FigDensityFit => density_fit(run, a, dir),
        Recipe::FigGlobalSpacing => global_spacing(run, a, dir),
        Recipe::FigChopTw => chop_tw(run, a, dir),
        Recipe::FigChopSpacing => chop_spacing(run, a, dir),
        Recipe::AppendixPermutations => permutations(run, a, dir),
    }
}

fn panel_for(run: &mut Run, a: &AnalyzeArgs) -> Result<ReturnPanel> {
    if a.panel.input.is_some() {
        let p = panel::load(&a.panel)?;
        run.input(a.panel.input.as_deref().expect("checked above"));
        for d in &p.dropped {
            run.warn(format!("dropped asset {}", d.asset_id));
        }
        return Ok(p.returns);
    }
    run.resolve("panel", "synthetic")?;
    panel::synthetic(a.synthetic_t, a.synthetic_n, a.synthetic_block, a.synthetic_alpha, run.seed)
}

/// ∫f over a log grid reaching far into the tail; the power laws here
/// decay at least like x⁻³, so the truncation is negligible.
fn check_norm(run: &mut Run, name: &str, f: impl Fn(f64) -> Result<f64>) -> Result<()> {
    let xs = logspace(1e-4, 1e3, 800);
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mass = trapezoid(&xs, &ys);
    run.check(name, (mass - 1.0).abs() < 1e-3, format!("mass {mass:.6}"));
    Ok(())
}

fn spacing_gen(run: &mut Run, a: &AnalyzeArgs, dir: PathBuf) -> Result<()> {
    let (n, t, alpha, count) = (a.n.unwrap_or(8), a.t.unwrap_or(16), a.alpha.unwrap_or(3.0), a.count.unwrap_or(20_000));
    // labels k = N/2, 3N/4, N count eigenvalues from 1; gap k sits below
    // the k-th one
    let labels: Vec<usize> = [n / 2, 3 * n / 4, n].into_iter().filter(|&k| k >= 2).collect();
    run.resolve("n", n)?;
    run.resolve("t", t)?;
    run.resolve("alpha", alpha)?;
    run.resolve("count", count)?;
    run.resolve("labels", &labels)?;
    let e = sample_generalized(&GenParams::new(n, t, alpha)?, count, run.seed)?;
    for &k in &labels {
        let sp = individual_spacings(&e, k - 1)?;
        write_individual(run, &dir.join(format!("spacing_k{k}.txt")), &sp, Some(alpha), a.bins)?;
    }
    let ss = linspace(0.0, 4.0, 401);
    let rows = ss.iter().map(|&s| Ok(vec![s, generalized_surmise(s, alpha)?, wigner_surmise(s)])).collect::<Result<Vec<_>>>()?;
    run.table(dir.join("curve.csv"), &["s", "p_alpha", "wigner"], rows)?;
    check_norm(run, "surmise-normalisation", |s| Ok(generalized_surmise(s, alpha)?))
}

fn tw_mc(run: &mut Run, a: &AnalyzeArgs, dir: PathBuf) -> Result<()> {
    let (n, t, count) = (a.n.unwrap_or(80), a.t.unwrap_or(320), a.count.unwrap_or(5000));
    run.resolve("n", n)?;
    run.resolve("t", t)?;
    run.resolve("count", count)?;
    let tw = TracyWidom::standard()?;
    check_solver(run, &tw);
    let e = sample_wishart(&WLParams::new(n, t)?, count, run.seed)?;
    let sc = wl_scaling_constants(n, t)?;
    for (edge, file) in [(Edge::Largest, "largest.txt"), (Edge::Smallest, "smallest.txt")] {
        let r = rescale_extremes(&e, edge, Some(&sc), &tw)?;
        write_rescaled(run, &dir.join(file), &r, &tw, a.bins)?;
    }
    let table = tw.table(-8.0, 6.0, 0.05)?;
    let (xs, fs): (Vec<f64>, Vec<f64>) = table.iter().map(|r| (r.0, r.2)).unzip();
    let mass = trapezoid(&xs, &fs);
    run.check("f1-mass", (mass - 1.0).abs() < 1e-3, format!("mass on [-8, 6] {mass:.6}"));
    run.table(dir.join("tw_table.csv"), &["s", "F1", "f1"], table.into_iter().map(|(s, f, p)| vec![s, f, p]))
}

fn density_fit(run: &mut Run, a: &AnalyzeArgs, dir: PathBuf) -> Result<()> {
    let rp = panel_for(run, a)?;
    let (s, residual) = eigenvalues_validated(&covariance_from_panel(&rp)?)?;
    commands::check_spectrum(run, &s, residual);
    run.values(dir.join("spectrum.txt"), "lambda", &s.lambdas)?;
    let c = s.c_ratio();
    if c > 1.0 {
        anyhow::bail!("panel has more assets than times (c = {c:.3}); the density fit needs c <= 1");
    }
    let unit = rescale_unit_mean(&s)?;
    let rep = fit_alpha_density(&unit.lambdas, c, a.bins)?;
    write_fit(run, &dir.join("fit.json"), &rep, Some(c))
}

fn global_spacing(run: &mut Run, a: &AnalyzeArgs, dir: PathBuf) -> Result<()> {
    let rp = panel_for(run, a)?;
    // the whole panel as a one-member ensemble
    let cfg = commands::chop_config(1, rp.n_times(), None, run.seed, true)?;
    let e = chop_method1(&rp, &cfg)?;
    let c = e.n as f64 / e.t as f64;
    let density = fit_alpha_density(&e.pooled_unit_mean(), c, None)?;
    let cfg = UnfoldConfig { poly_degree: a.degree.unwrap_or(5), bins: a.bins, ..Default::default() };
    let r = unfold_spacings(&e, &cfg)?;
    write_unfolded(run, &dir.join("spacings.txt"), &r, a.bins)?;
    let fit = fit_alpha_spacing(&r.spacings, a.bins)?;
    write_fit(run, &dir.join("fit.json"), &fit, None)?;
    run.resolve("alpha_density", density.alpha_hat)?;
    let ss = linspace(0.0, 4.0, 401);
    let rows = ss
        .iter()
        .map(|&s| Ok(vec![s, wigner_surmise(s), generalized_surmise(s, density.alpha_hat)?, generalized_surmise(s, fit.alpha_hat)?]))
        .collect::<Result<Vec<_>>>()?;
    run.table(dir.join("curves.csv"), &["s", "wigner", "p_density_alpha", "p_fit_alpha"], rows)
}

fn chop_for(run: &mut Run, a: &AnalyzeArgs, rp: &ReturnPanel, n_default: usize) -> Result<rmt_core::ensembles::SpectraEnsemble> {
    let method = a.method.unwrap_or(2);
    let (t, n) = (a.t.unwrap_or(48), a.n.unwrap_or(n_default));
    run.resolve("method", method)?;
    run.resolve("t", t)?;
    if method == 2 {
        run.resolve("n", n)?;
    }
    let cfg = commands::chop_config(method, t, Some(n), run.seed, true)?;
    run.warn_all(cfg.warnings(rp.n_assets()));
    Ok(if method == 1 { chop_method1(rp, &cfg)? } else { chop_method2(rp, &cfg)? })
}

fn chop_tw(run: &mut Run, a: &AnalyzeArgs, dir: PathBuf) -> Result<()> {
    let rp = panel_for(run, a)?;
    let e = chop_for(run, a, &rp, 20)?;
    let tw = TracyWidom::standard()?;
    check_solver(run, &tw);
    let n = e.n;
    let rows = e.spectra.iter().map(|s| vec![s.lambdas[0], s.lambdas[1.min(n - 1)], s.lambdas[n.saturating_sub(2)], s.lambdas[n - 1]]);
    run.table(dir.join("order_stats.csv"), &["smallest", "second_smallest", "second_largest", "largest"], rows)?;
    for (edge, file) in [(Edge::Smallest, "smallest.txt"), (Edge::Largest, "largest.txt")] {
        let r = rescale_extremes(&e, edge, None, &tw)?;
        write_rescaled(run, &dir.join(file), &r, &tw, a.bins)?;
    }
    Ok(())
}

fn chop_spacing(run: &mut Run, a: &AnalyzeArgs, dir: PathBuf) -> Result<()> {
    let rp = panel_for(run, a)?;
    let e = chop_for(run, a, &rp, 10)?;
    let c = e.n as f64 / e.t as f64;
    // two spacings from the middle of the spectrum
    for k in [e.n / 2, e.n / 2 + 1].into_iter().filter(|&k| k >= 1 && k < e.n) {
        let sp = individual_spacings(&e, k)?;
        write_individual(run, &dir.join(format!("spacing_k{k}.txt")), &sp, None, a.bins)?;
    }
    let density = fit_alpha_density(&e.pooled_unit_mean(), c, a.bins)?;
    write_fit(run, &dir.join("density_fit.json"), &density, Some(c))?;
    let cfg = UnfoldConfig { poly_degree: a.degree.unwrap_or(5), bins: a.bins, ..Default::default() };
    let r = unfold_spacings(&e, &cfg)?;
    write_unfolded(run, &dir.join("spacings.txt"), &r, a.bins)?;
    let fit = fit_alpha_spacing(&r.spacings, a.bins)?;
    write_fit(run, &dir.join("spacing_fit.json"), &fit, None)
}

fn permutations(run: &mut Run, a: &AnalyzeArgs, dir: PathBuf) -> Result<()> {
    let rp = panel_for(run, a)?;
    let (t, n, count) = (a.t.unwrap_or(48), a.n.unwrap_or(20), a.permutations.unwrap_or(10));
    run.resolve("t", t)?;
    run.resolve("n", n)?;
    run.resolve("permutations", count)?;
    let cfg = commands::chop_config(2, t, Some(n), run.seed, true)?;
    run.warn_all(cfg.warnings(rp.n_assets()));
    commands::write_permutations(run, &dir.join("chop.txt"), &rp, &cfg, count, false).context("permutation study")
}
