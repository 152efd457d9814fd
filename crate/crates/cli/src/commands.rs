//! One function per subcommand, plus the output helpers the recipes share.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rmt_core::chopping::{chop_method1, chop_method2, permuted_choppings, ChopConfig};
use rmt_core::curve::linspace;
use rmt_core::densities::{density_grid, mp_support, tabulate_generalized, tabulate_mp};
use rmt_core::ensembles::{sample_generalized, sample_wishart, GenParams, Provenance, SpectraEnsemble, WLParams};
use rmt_core::fitting::{default_bins, fit_alpha_density, fit_alpha_spacing, ks_distance, FitReport, FitTarget};
use rmt_core::ingest::{format_panel, DroppedAsset};
use rmt_core::io::{self, SpectrumSummary};
use rmt_core::spacings::{generalized_surmise, individual_spacings, wigner_cdf, wigner_surmise, SpacingKind, SpacingSample};
use rmt_core::spectra::{covariance_from_panel, eigenvalues_validated, histogram_density, DensityHistogram, Spectrum};
use rmt_core::tracy_widom::{rescale_extremes, wl_scaling_constants, Edge, RescaledExtremes, TracyWidom};
use rmt_core::unfolding::{unfold_spacings, UnfoldConfig, UnfoldResult};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::manifest::{sibling, Run};
use crate::panel;

fn main_name(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(default))
}

pub fn histogram(values: &[f64], bins: Option<usize>) -> Result<DensityHistogram> {
    Ok(histogram_density(values, bins.unwrap_or_else(|| default_bins(values.len())), None)?)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0))
}

/// Rows (s, height, Wigner[, generalised]) at the histogram centres.
pub fn spacing_overlay(h: &DensityHistogram, alpha: Option<f64>) -> Result<Vec<Vec<f64>>> {
    h.centers()
        .into_iter()
        .zip(&h.heights)
        .map(|(s, &y)| {
            let mut row = vec![s, y, wigner_surmise(s)];
            if let Some(a) = alpha {
                row.push(generalized_surmise(s, a)?);
            }
            Ok(row)
        })
        .collect()
}

pub fn tw_pdf(tw: &TracyWidom, x: f64) -> f64 {
    tw.pdf(x).unwrap_or(0.0)
}

/// Rows (χ, height, f₁) at the histogram centres.
pub fn tw_overlay(h: &DensityHistogram, tw: &TracyWidom) -> Vec<Vec<f64>> {
    h.centers().into_iter().zip(&h.heights).map(|(x, &y)| vec![x, y, tw_pdf(tw, x)]).collect()
}

pub fn check_solver(run: &mut Run, tw: &TracyWidom) {
    let s = &tw.solution;
    run.check(
        "painleve-step-halving",
        s.error_estimate <= s.tolerance,
        format!("error {:.3e} at step {} (tolerance {:.0e})", s.error_estimate, s.step, s.tolerance),
    );
}

#[derive(Serialize)]
pub struct RescaleSummary {
    pub edge: Edge,
    pub location: f64,
    pub scale: f64,
    pub moment_matched: bool,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub tw_mean: f64,
    pub tw_variance: f64,
    pub ks: f64,
}

pub fn rescale_summary(r: &RescaledExtremes, tw: &TracyWidom) -> Result<RescaleSummary> {
    let (mean, variance) = mean_var(&r.chi);
    Ok(RescaleSummary {
        edge: r.edge,
        location: r.location,
        scale: r.scale,
        moment_matched: r.moment_matched,
        count: r.chi.len(),
        mean,
        variance,
        tw_mean: tw.mean(),
        tw_variance: tw.variance(),
        ks: ks_distance(&r.chi, |x| tw.cdf_clamped(x))?,
    })
}

/// Writes `<stem>.txt`, `<stem>_hist.csv` (with the F₁ density) and
/// `<stem>.json`.
pub fn write_rescaled(run: &mut Run, main: &Path, r: &RescaledExtremes, tw: &TracyWidom, bins: Option<usize>) -> Result<()> {
    run.values(main, "chi", &r.chi)?;
    let h = histogram(&r.chi, bins)?;
    run.table(sibling(main, "_hist.csv"), &["chi", "density", "f1"], tw_overlay(&h, tw))?;
    run.json(sibling(main, ".json"), &rescale_summary(r, tw)?)
}

/// Tabulates the fitted and reference curves over the histogram range.
pub fn fit_curves(rep: &FitReport, c: Option<f64>) -> Result<(Vec<&'static str>, Vec<Vec<f64>>)> {
    let hi = *rep.histogram.bin_edges.last().expect("bins");
    let a = rep.alpha_hat;
    match rep.target {
        FitTarget::Density => {
            let c = c.context("density curves need c")?;
            let xs = linspace(hi / 400.0, hi, 400);
            let g = tabulate_generalized(c, a, &xs)?;
            let mp = tabulate_mp(c, &xs)?;
            Ok((vec!["x", "rho_alpha", "rho_mp"], (0..xs.len()).map(|i| vec![xs[i], g.ys[i], mp.ys[i]]).collect()))
        }
        FitTarget::Spacing => {
            let ss = linspace(0.0, hi, 400);
            let rows = ss.iter().map(|&s| Ok(vec![s, generalized_surmise(s, a)?, wigner_surmise(s)])).collect::<Result<_>>()?;
            Ok((vec!["s", "p_alpha", "wigner"], rows))
        }
    }
}

/// Report, histogram and curve files for a fit; warns on a boundary hit.
pub fn write_fit(run: &mut Run, main: &Path, rep: &FitReport, c: Option<f64>) -> Result<()> {
    if rep.at_boundary {
        run.warn(format!("alpha estimate {:.4} sits on the edge of the scanned range", rep.alpha_hat));
    }
    run.check(
        "fit-objective-finite",
        rep.objective.is_finite() && rep.ks.is_finite(),
        format!("objective {:.4e}, ks {:.4}", rep.objective, rep.ks),
    );
    run.json(main, rep)?;
    run.histogram(sibling(main, "_hist.csv"), &rep.histogram)?;
    let (header, rows) = fit_curves(rep, c)?;
    run.table(sibling(main, "_curve.csv"), &header, rows)
}

#[derive(Serialize)]
pub struct UnfoldSummary<'a> {
    pub count: usize,
    pub mean: f64,
    pub dropped_nonpositive: usize,
    pub degree: usize,
    pub scale: f64,
    pub coeffs: &'a [f64],
    pub max_abs_residual: f64,
    pub ks_wigner: f64,
}

pub fn write_unfolded(run: &mut Run, main: &Path, r: &UnfoldResult, bins: Option<usize>) -> Result<()> {
    run.warn_all(r.fit.warnings.iter().cloned());
    let v = &r.spacings.values;
    run.values(main, "s", v)?;
    let h = histogram(v, bins)?;
    run.table(sibling(main, "_hist.csv"), &["s", "density", "wigner"], spacing_overlay(&h, None)?)?;
    let summary = UnfoldSummary {
        count: v.len(),
        mean: r.spacings.mean(),
        dropped_nonpositive: r.dropped_nonpositive,
        degree: r.fit.degree,
        scale: r.fit.scale,
        coeffs: &r.fit.coeffs,
        max_abs_residual: r.fit.max_abs_residual,
        ks_wigner: ks_distance(v, wigner_cdf)?,
    };
    run.json(sibling(main, ".json"), &summary)?;
    run.table(
        sibling(main, "_counts.csv"),
        &["y", "count", "fit"],
        r.fit.grid.iter().zip(&r.fit.counts).map(|(&y, &n)| vec![y, n, r.fit.eval(y)]),
    )
}

/// Eigenvalue checks for a single full-panel spectrum.
pub fn check_spectrum(run: &mut Run, s: &Spectrum, residual: f64) {
    let n = s.n_assets as f64;
    let top = s.max().max(1.0);
    run.check("eigen-residual", residual <= 1e-9 * top * n, format!("max|C - QΛQᵀ| = {residual:.3e}"));
    let trace: f64 = s.lambdas.iter().sum();
    run.check("unit-diagonal-trace", (trace - n).abs() <= 1e-9 * n, format!("trace {trace} for {n} assets"));
}

pub fn ingest(run: &mut Run, a: &IngestArgs) -> Result<()> {
    let p = panel::load(&a.panel)?;
    run.input(a.panel.input.as_deref().expect("checked by load"));
    report_dropped(run, &p.dropped);
    let rp = &p.returns;
    let main = main_name(&a.out, "returns.csv");
    run.text(&main, &format_panel(&rp.asset_ids, &p.timestamps, &rp.x)?)?;
    let summary = json!({
        "n_times": rp.n_times(),
        "n_assets": rp.n_assets(),
        "c": rp.n_assets() as f64 / rp.n_times() as f64,
        "first": p.timestamps.first(),
        "last": p.timestamps.last(),
        "dropped": p.dropped,
        "assets": rp.asset_ids.iter().enumerate().map(|(j, id)| json!({
            "id": id, "mean": rp.per_asset_mean[j], "sigma": rp.per_asset_sigma[j],
        })).collect::<Vec<_>>(),
    });
    run.json(sibling(&main, ".json"), &summary)
}

fn report_dropped(run: &mut Run, dropped: &[DroppedAsset]) {
    for d in dropped {
        run.warn(format!("dropped asset {} ({} missing, {} nonpositive quotes)", d.asset_id, d.missing, d.nonpositive));
    }
}

pub fn sample(run: &mut Run, a: &SampleArgs) -> Result<()> {
    let mut params = Map::new();
    let e = match a.ensemble {
        EnsembleKind::Wl => sample_wishart(&WLParams::new(a.n, a.t)?, a.count, run.seed)?,
        EnsembleKind::Gen => {
            let alpha = a.alpha.context("--alpha is required for the gen ensemble")?;
            params.insert("alpha".into(), json!(alpha));
            sample_generalized(&GenParams::new(a.n, a.t, alpha)?, a.count, run.seed)?
        }
    };
    run.ensemble(main_name(&a.out, "ensemble.txt"), &e, params)
}

pub fn chop_config(method: u8, t: usize, n: Option<usize>, seed: u64, renormalize: bool) -> Result<ChopConfig> {
    let mut cfg = match (method, n) {
        (1, _) => ChopConfig::method1(t),
        (_, Some(n)) => ChopConfig::method2(t, n),
        (_, None) => bail!("method 2 needs a block size --n"),
    };
    cfg.seed = seed;
    cfg.renormalize_per_window = renormalize;
    cfg.validate()?;
    Ok(cfg)
}

pub fn chop_params(cfg: &ChopConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("t_window".into(), json!(cfg.t_window));
    m.insert("n_block".into(), json!(cfg.n_block));
    m.insert("renormalize_per_window".into(), json!(cfg.renormalize_per_window));
    m
}

pub fn chop(run: &mut Run, a: &ChopArgs) -> Result<()> {
    let p = panel::load(&a.panel)?;
    run.input(a.panel.input.as_deref().expect("checked by load"));
    report_dropped(run, &p.dropped);
    if a.method == 1 && a.n.is_some() {
        run.warn("--n is ignored by method 1");
    }
    let cfg = chop_config(a.method, a.t, if a.method == 1 { None } else { a.n }, run.seed, a.renormalize)?;
    run.warn_all(cfg.warnings(p.returns.n_assets()));
    let main = main_name(&a.out, "ensemble.txt");
    if a.permutations == 0 {
        let e = if a.method == 1 { chop_method1(&p.returns, &cfg)? } else { chop_method2(&p.returns, &cfg)? };
        return run.ensemble(&main, &e, chop_params(&cfg));
    }
    if a.method != 2 {
        bail!("permutations apply to method 2 only");
    }
    write_permutations(run, &main, &p.returns, &cfg, a.permutations, a.include_identity)
}

pub fn write_permutations(
    run: &mut Run,
    main: &Path,
    rp: &rmt_core::ingest::ReturnPanel,
    cfg: &ChopConfig,
    count: usize,
    include_identity: bool,
) -> Result<()> {
    let study = permuted_choppings(rp, cfg, count, run.seed, include_identity)?;
    for (i, e) in study.ensembles.iter().enumerate() {
        let mut params = chop_params(cfg);
        params.insert("order".into(), json!(study.orders[i]));
        run.ensemble(sibling(main, &format!("_perm{i:02}.txt")), e, params)?;
    }
    // order statistics side by side, one column per ensemble
    let n = study.ensembles[0].n;
    let header: Vec<String> = (0..study.ensembles.len()).map(|i| format!("perm{i:02}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    for (name, k) in [("smallest", 0), ("second_smallest", 1.min(n - 1)), ("second_largest", n.saturating_sub(2)), ("largest", n - 1)] {
        let cols: Vec<Vec<f64>> = study.ensembles.iter().map(|e| e.order_statistic(k)).collect();
        let rows = (0..cols[0].len()).map(|r| cols.iter().map(|c| c[r]).collect());
        run.table(sibling(main, &format!("_{name}.csv")), &header, rows)?;
    }
    run.json(sibling(main, "_permutations.json"), &json!({ "orders": study.orders, "report": study.report }))
}

pub fn spectrum(run: &mut Run, a: &SpectrumArgs) -> Result<()> {
    if let Some(path) = &a.ensemble {
        run.input(path);
        let e = io::read_ensemble(path, None)?;
        let pooled = e.pooled_unit_mean();
        let main = main_name(&a.out, "pooled_hist.csv");
        run.histogram(&main, &histogram(&pooled, a.bins)?)?;
        let (lo, hi) = pooled.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        return run.json(
            sibling(&main, ".json"),
            &json!({ "n": e.n, "t": e.t, "count": e.len(), "c": e.n as f64 / e.t as f64, "min": lo, "max": hi }),
        );
    }
    let p = panel::load(&a.panel).context("spectrum needs --input or --ensemble")?;
    run.input(a.panel.input.as_deref().expect("checked by load"));
    report_dropped(run, &p.dropped);
    let (s, residual) = eigenvalues_validated(&covariance_from_panel(&p.returns)?)?;
    check_spectrum(run, &s, residual);
    let main = main_name(&a.out, "spectrum.txt");
    run.values(&main, "lambda", &s.lambdas)?;
    let unit = rmt_core::spectra::rescale_unit_mean(&s)?;
    run.histogram(sibling(&main, "_hist.csv"), &histogram(&unit.lambdas, a.bins)?)?;
    run.json(sibling(&main, ".json"), &json!({ "summary": SpectrumSummary::of(&s), "residual": residual }))
}

pub fn unfold(run: &mut Run, a: &UnfoldArgs) -> Result<()> {
    run.input(&a.input);
    let e = io::read_ensemble(&a.input, None)?;
    let cfg = UnfoldConfig { grid_points: a.grid, poly_degree: a.degree, bins: a.bins, from_zero: a.from_zero };
    let r = unfold_spacings(&e, &cfg)?;
    write_unfolded(run, &main_name(&a.out, "spacings.txt"), &r, a.bins)
}

pub fn spacing(run: &mut Run, a: &SpacingArgs) -> Result<()> {
    match a.mode {
        SpacingMode::Theory => {
            if !(a.s_max > 0.0) || a.points < 2 {
                bail!("theory curves need --s-max > 0 and at least two points");
            }
            let ss = linspace(0.0, a.s_max, a.points);
            let mut header = vec!["s", "wigner"];
            if a.alpha.is_some() {
                header.push("p_alpha");
            }
            let rows = ss
                .iter()
                .map(|&s| {
                    let mut row = vec![s, wigner_surmise(s)];
                    if let Some(al) = a.alpha {
                        row.push(generalized_surmise(s, al)?);
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            run.table(main_name(&a.out, "spacing_theory.csv"), &header, rows)
        }
        SpacingMode::Individual => {
            let path = a.input.as_ref().context("individual spacings need --in")?;
            let k = a.k.context("individual spacings need --k")?;
            run.input(path);
            let e = io::read_ensemble(path, None)?;
            let sp = individual_spacings(&e, k)?;
            write_individual(run, &main_name(&a.out, &format!("spacing_k{k}.txt")), &sp, a.alpha, a.bins)
        }
    }
}

pub fn write_individual(run: &mut Run, main: &Path, sp: &SpacingSample, alpha: Option<f64>, bins: Option<usize>) -> Result<()> {
    run.values(main, "s", &sp.values)?;
    let h = histogram(&sp.values, bins)?;
    let mut header = vec!["s", "density", "wigner"];
    if alpha.is_some() {
        header.push("p_alpha");
    }
    run.table(sibling(main, "_hist.csv"), &header, spacing_overlay(&h, alpha)?)?;
    let ks_gen = match alpha {
        Some(al) => Some(ks_distance(&sp.values, |s| rmt_core::spacings::generalized_surmise_cdf(s, al).unwrap_or(f64::NAN))?),
        None => None,
    };
    run.json(
        sibling(main, ".json"),
        &json!({
            "k": sp.k_index, "count": sp.values.len(), "mean": sp.mean(),
            "ks_wigner": ks_distance(&sp.values, wigner_cdf)?, "alpha": alpha, "ks_generalised": ks_gen,
        }),
    )
}

pub fn density(run: &mut Run, a: &DensityArgs) -> Result<()> {
    if a.points < 4 {
        bail!("--points must be at least 4");
    }
    let (_, edge) = mp_support(a.c)?;
    let curve = match a.kind {
        DensityKind::Mp => {
            let xs = density_grid(a.c, a.points, a.x_max.unwrap_or(1.5 * edge))?;
            tabulate_mp(a.c, &xs)?
        }
        DensityKind::Gen => {
            let alpha = a.alpha.context("--alpha is required for the gen density")?;
            let xs = density_grid(a.c, a.points, a.x_max.unwrap_or(20.0))?;
            tabulate_generalized(a.c, alpha, &xs)?
        }
    };
    let name = match a.kind {
        DensityKind::Mp => "density_mp.csv",
        DensityKind::Gen => "density_gen.csv",
    };
    run.table(main_name(&a.out, name), &["x", "rho"], curve.xs.iter().zip(&curve.ys).map(|(&x, &y)| vec![x, y]))
}

/// Analytic constants only make sense for sampled Wishart ensembles.
pub fn resolve_scaling(run: &mut Run, e: &SpectraEnsemble, scaling: Scaling) -> Result<Option<rmt_core::tracy_widom::TWScalings>> {
    let analytic = match scaling {
        Scaling::Analytic => {
            if e.provenance != Provenance::SampledWl {
                run.warn("analytic Wishart constants applied to a non-Wishart ensemble");
            }
            true
        }
        Scaling::Moment => false,
        Scaling::Auto => e.provenance == Provenance::SampledWl,
    };
    Ok(if analytic { Some(wl_scaling_constants(e.n, e.t)?) } else { None })
}

pub fn edge(e: EdgeArg) -> Edge {
    match e {
        EdgeArg::Smallest => Edge::Smallest,
        EdgeArg::Largest => Edge::Largest,
    }
}

pub fn tw(run: &mut Run, a: &TwArgs) -> Result<()> {
    let tw = TracyWidom::standard()?;
    check_solver(run, &tw);
    if a.rescale {
        let path = a.input.as_ref().context("--rescale needs --in")?;
        run.input(path);
        let e = io::read_ensemble(path, None)?;
        let sc = resolve_scaling(run, &e, a.scaling)?;
        let r = rescale_extremes(&e, edge(a.edge), sc.as_ref(), &tw)?;
        let default = match a.edge {
            EdgeArg::Smallest => "tw_smallest.txt",
            EdgeArg::Largest => "tw_largest.txt",
        };
        return write_rescaled(run, &main_name(&a.out, default), &r, &tw, None);
    }
    let rows = tw.table(a.from, a.to, a.step)?;
    run.table(main_name(&a.out, "tw_table.csv"), &["s", "F1", "f1"], rows.into_iter().map(|(s, f, p)| vec![s, f, p]))
}

pub fn fit(run: &mut Run, a: &FitArgs) -> Result<()> {
    run.input(&a.input);
    match a.target {
        FitTargetArg::Density => {
            let (values, c) = if io::sidecar_path(&a.input).exists() {
                let e = io::read_ensemble(&a.input, None)?;
                let c = a.c.unwrap_or(e.n as f64 / e.t as f64);
                (e.pooled_unit_mean(), c)
            } else {
                let c = a.c.context("plain value files need --c")?;
                (io::read_values(&a.input)?, c)
            };
            let rep = fit_alpha_density(&values, c, a.bins)?;
            write_fit(run, &main_name(&a.out, "fit_density.json"), &rep, Some(c))
        }
        FitTargetArg::Spacing => {
            let values = io::read_values(&a.input)?;
            let sp = SpacingSample { values, kind: SpacingKind::GlobalUnfolded, k_index: None };
            let rep = fit_alpha_spacing(&sp, a.bins)?;
            write_fit(run, &main_name(&a.out, "fit_spacing.json"), &rep, None)
        }
    }
}
