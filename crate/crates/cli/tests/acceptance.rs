//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rmt_core::chopping::{chop_method1, chop_method2, permuted_choppings, ChopConfig};
use rmt_core::densities::{generalized_density, mp_cdf, mp_density, mp_support};
use rmt_core::ensembles::{sample_generalized, sample_wishart, GenParams, WLParams};
use rmt_core::fitting::{fit_alpha_density, fit_alpha_spacing, ks_distance, ks_two_sample};
use rmt_core::ingest::return_panel_from_matrix;
use rmt_core::linalg::Matrix;
use rmt_core::quadrature::composite;
use rmt_core::spacings::{generalized_surmise, generalized_surmise_cdf, individual_spacings, wigner_cdf};
use rmt_core::special::airy_ai;
use rmt_core::tracy_widom::{rescale_extremes, solve_pii_fixed_step, wl_scaling_constants, Edge, TracyWidom};
use rmt_core::unfolding::{unfold_spacings, UnfoldConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = (bool, String);

fn gaussian_panel(t: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_row_major(t, n, (0..t * n).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
}

fn mp_convergence() -> Outcome {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let ks = pool.install(|| {
        let e = sample_wishart(&WLParams::new(200, 800).unwrap(), 200, 1).unwrap();
        ks_distance(&e.pooled_unit_mean(), |x| mp_cdf(x, 0.25).unwrap()).unwrap()
    });
    let secs = start.elapsed().as_secs_f64();
    (ks < 0.02 && secs < 120.0, format!("ks={ks:.4} (< 0.02), {secs:.1}s single-threaded (< 120)"))
}

fn tw_edges(tw: &TracyWidom) -> (Outcome, Outcome) {
    let (n, t) = (80, 320);
    let e = sample_wishart(&WLParams::new(n, t).unwrap(), 5000, 2).unwrap();
    let sc = wl_scaling_constants(n, t).unwrap();
    let cdf = |x: f64| tw.cdf_clamped(x);
    let large = rescale_extremes(&e, Edge::Largest, Some(&sc), tw).unwrap();
    let ks_l = ks_distance(&large.chi, cdf).unwrap();
    let mean_l = large.chi.iter().sum::<f64>() / large.chi.len() as f64;
    let dm = (mean_l - tw.mean()).abs();
    let small = rescale_extremes(&e, Edge::Smallest, Some(&sc), tw).unwrap();
    let ks_s = ks_distance(&small.chi, cdf).unwrap();
    (
        (ks_l < 0.03 && dm < 0.05, format!("ks={ks_l:.4} (< 0.03), mean {mean_l:.4} vs {:.4} (|diff| < 0.05)", tw.mean())),
        (ks_s < 0.04, format!("ks={ks_s:.4} (< 0.04)")),
    )
}

fn painleve(tw: &TracyWidom) -> Outcome {
    let h = 1.0 / 16.0;
    let a = solve_pii_fixed_step(8.0, -10.0, h).unwrap();
    let b = solve_pii_fixed_step(8.0, -10.0, h / 2.0).unwrap();
    let dq = (a.q(0.0).unwrap() - b.q(0.0).unwrap()).abs();
    let boundary = (tw.solution.q(8.0).unwrap() - airy_ai(8.0)).abs() / airy_ai(8.0);
    let (lo, hi) = tw.range();
    let mass = composite(lo, hi, 400, |x| tw.pdf(x).unwrap());
    let ok = dq < 1e-6 && boundary < 1e-8 && (mass - 1.0).abs() < 1e-4;
    (ok, format!("|dq(0)|={dq:.1e} (< 1e-6), q(8)/Ai(8)-1={boundary:.1e}, mass={mass:.8} (1 +- 1e-4)"))
}

fn surmise_vs_ensemble() -> Outcome {
    let alpha = 3.0;
    let e = sample_generalized(&GenParams::new(8, 16, alpha).unwrap(), 20_000, 3).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    // labels 4, 6, 8 count eigenvalues from one, i.e. gaps 3, 5, 7 here
    for label in [4usize, 6, 8] {
        let s = individual_spacings(&e, label - 1).unwrap();
        let d_gen = ks_distance(&s.values, |x| generalized_surmise_cdf(x, alpha).unwrap()).unwrap();
        let d_ws = ks_distance(&s.values, wigner_cdf).unwrap();
        ok &= d_gen < 0.05 && d_ws > 0.08;
        parts.push(format!("k={label}: gen {d_gen:.4} ws {d_ws:.4}"));
    }
    (ok, format!("{} (gen < 0.05, ws > 0.08)", parts.join(", ")))
}

/// Norm and first moment of a density on (0, ∞) in the variable u = ln x.
fn log_moments(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let panels = ((hi - lo) * 4.0) as usize;
    let norm = composite(lo, hi, panels, |u| {
        let x = u.exp();
        x * f(x)
    });
    let first = composite(lo, hi, panels, |u| {
        let x = u.exp();
        x * x * f(x)
    });
    (norm, first)
}

fn normalisations() -> Outcome {
    let mut worst_gen = 0.0f64;
    for &alpha in &[0.5, 1.0, 3.0, 10.0] {
        // first-moment tail ~ x^-α; run u out to where it is below 1e-9
        let hi = 21.0 / alpha + 6.0 + 40.0 / alpha;
        for &c in &[0.25, 0.5] {
            let (n, m) = log_moments(|x| generalized_density(x, c, alpha).unwrap(), -12.0, hi);
            worst_gen = worst_gen.max((n - 1.0).abs()).max((m - 1.0).abs());
        }
        let (n, m) = log_moments(|s| generalized_surmise(s, alpha).unwrap(), -16.0, hi);
        worst_gen = worst_gen.max((n - 1.0).abs()).max((m - 1.0).abs());
    }
    let mut worst_mp = 0.0f64;
    for &c in &[0.1, 0.25, 0.5, 1.0] {
        let (a, b) = mp_support(c).unwrap();
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let jac = |th: f64| half * th.sin();
        let n = composite(0.0, std::f64::consts::PI, 16, |th| mp_density(mid - half * th.cos(), c) * jac(th));
        let m = composite(0.0, std::f64::consts::PI, 16, |th| {
            let x = mid - half * th.cos();
            x * mp_density(x, c) * jac(th)
        });
        worst_mp = worst_mp.max((n - 1.0).abs()).max((m - 1.0).abs());
    }
    (worst_gen < 1e-6 && worst_mp < 1e-10, format!("max dev generalised {worst_gen:.1e} (< 1e-6), mp {worst_mp:.1e} (< 1e-10)"))
}

fn tail_exponents() -> Outcome {
    let mut worst = 0.0f64;
    for &alpha in &[1.0, 3.0] {
        let target = -(alpha + 2.0);
        let slope = |f: &dyn Fn(f64) -> f64| (f(1e3).ln() - f(1e2).ln()) / 10f64.ln();
        let rho = slope(&|x| generalized_density(x, 0.25, alpha).unwrap());
        let p = slope(&|s| generalized_surmise(s, alpha).unwrap());
        worst = worst.max((rho / target - 1.0).abs()).max((p / target - 1.0).abs());
    }
    (worst < 0.02, format!("max relative slope error {worst:.2e} (< 2%)"))
}

fn alpha_recovery() -> Outcome {
    let e = sample_generalized(&GenParams::new(50, 200, 3.0).unwrap(), 200, 4).unwrap();
    let d = fit_alpha_density(&e.pooled_unit_mean(), 0.25, None).unwrap();
    let g = sample_generalized(&GenParams::new(8, 16, 3.0).unwrap(), 20_000, 5).unwrap();
    let s = fit_alpha_spacing(&individual_spacings(&g, 4).unwrap(), None).unwrap();
    let wl = sample_wishart(&WLParams::new(20, 48).unwrap(), 400, 6).unwrap();
    let w = fit_alpha_spacing(&unfold_spacings(&wl, &UnfoldConfig::default()).unwrap().spacings, None).unwrap();
    let ok = (d.alpha_hat / 3.0 - 1.0).abs() < 0.1 && (s.alpha_hat / 3.0 - 1.0).abs() < 0.1 && w.at_boundary;
    (
        ok,
        format!(
            "density {:.3}, spacing {:.3} (3 +- 10%); wl spacing {:.1} boundary={}",
            d.alpha_hat, s.alpha_hat, w.alpha_hat, w.at_boundary
        ),
    )
}

fn chopping_counts() -> Outcome {
    let rp = return_panel_from_matrix(&gaussian_panel(970, 401, 7)).unwrap();
    let a = chop_method2(&rp, &ChopConfig::method2(48, 10)).unwrap().len();
    let b = chop_method2(&rp, &ChopConfig::method2(48, 20)).unwrap().len();
    let c = chop_method1(&rp, &ChopConfig::method1(48)).unwrap().len();
    ((a, b, c) == (800, 400, 20), format!("n=10: {a}, n=20: {b}, method 1: {c} (800, 400, 20)"))
}

fn null_closure() -> Outcome {
    let rp = return_panel_from_matrix(&gaussian_panel(970, 401, 8)).unwrap();
    let cfg = ChopConfig::method2(48, 20);
    let chopped = chop_method2(&rp, &cfg).unwrap();
    let reference = sample_wishart(&WLParams::new(20, 48).unwrap(), 4000, 9).unwrap();
    let ks_pool = ks_two_sample(&chopped.pooled_unit_mean(), &reference.pooled_unit_mean()).unwrap();
    let study = permuted_choppings(&rp, &cfg, 10, 10, false).unwrap();
    let smallest = &study.report.comparisons[0];
    (
        ks_pool < 0.02 && smallest.max_ks < 0.05,
        format!(
            "pooled ks={ks_pool:.4} (< 0.02); permutations smallest max ks={:.4} mean {:.4} (< 0.05)",
            smallest.max_ks, smallest.mean_ks
        ),
    )
}

fn unfolding() -> Outcome {
    let e = sample_wishart(&WLParams::new(20, 48).unwrap(), 400, 11).unwrap();
    let r = unfold_spacings(&e, &UnfoldConfig::default()).unwrap();
    let ks = ks_distance(&r.spacings.values, wigner_cdf).unwrap();
    let mean = r.spacings.mean();
    (
        ks < 0.03 && (mean - 1.0).abs() < 0.02,
        format!("ks={ks:.4} (< 0.03), mean {mean:.4} (1 +- 0.02), dropped {}", r.dropped_nonpositive),
    )
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.to_string_lossy().ends_with(".manifest.json") {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Every recipe twice with one seed, on 1 and 4 threads; all outputs but
/// the manifests (which hold timings) must match byte for byte.
fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let recipes: [(&str, &[&str]); 7] = [
        ("fig-spacing-gen", &["--count", "2000"]),
        ("fig-tw-mc", &["--count", "500"]),
        ("fig-density-fit", &[]),
        ("fig-global-spacing", &[]),
        ("fig-chop-tw", &[]),
        ("fig-chop-spacing", &[]),
        ("appendix-permutations", &["--permutations", "3"]),
    ];
    let mut bad = Vec::new();
    let mut compared = 0;
    for (threads, dir) in [("1", "a"), ("4", "b")] {
        for (recipe, extra) in recipes {
            let status = Command::new(env!("CARGO_BIN_EXE_rmt"))
                .args(["--seed", "12", "--threads", threads, "--out-dir"])
                .arg(tmp.path().join(dir))
                .args(["analyze", recipe])
                .args(extra)
                .stdout(std::process::Stdio::null())
                .status()
                .unwrap();
            if !status.success() {
                bad.push(format!("{recipe} exited {status}"));
            }
        }
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (fa, fb) = (files(&a), files(&b));
    if fa != fb {
        bad.push("different file sets".into());
    }
    for f in &fa {
        compared += 1;
        if std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).ok().unwrap_or_default() {
            bad.push(f.display().to_string());
        }
    }
    (bad.is_empty() && compared > 0, format!("{compared} files from 7 recipes compared, mismatches: {bad:?}"))
}

fn main() {
    let tw = TracyWidom::standard().expect("Painleve solve");
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |k: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t0 = Instant::now();
        let out = f();
        eprintln!("  [{name}: {:.1}s]", t0.elapsed().as_secs_f64());
        results.push((k, name, out));
    };
    run(1, "mp-convergence", &mp_convergence);
    let (c2, c3) = tw_edges(&tw);
    run(2, "tw-largest", &|| c2.clone());
    run(3, "tw-smallest", &|| c3.clone());
    run(4, "painleve-solver", &|| painleve(&tw));
    run(5, "generalised-surmise", &surmise_vs_ensemble);
    run(6, "normalisations", &normalisations);
    run(7, "tail-exponents", &tail_exponents);
    run(8, "alpha-recovery", &alpha_recovery);
    run(9, "chopping-counts", &chopping_counts);
    run(10, "null-closure", &null_closure);
    run(11, "unfolding", &unfolding);
    run(12, "determinism", &determinism);
    let mut failed = 0;
    for (k, name, (ok, detail)) in &results {
        println!("criterion {k:>2} {} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
