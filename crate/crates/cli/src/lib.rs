//! The `rmt` command-line pipeline. [`run`] executes one parsed
//! invocation and reports whether every internal check passed.

// `!(x > 0.0)` is deliberate: NaN has to fail every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod panel;
pub mod recipes;

use std::ffi::OsString;

use anyhow::{Context, Result};

use args::{Cli, Command};
use manifest::Run;

/// Runs a parsed command; `Ok(false)` means outputs were written but a
/// check failed.
pub fn run(cli: &Cli, argv: &[OsString]) -> Result<bool> {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (command, label) = match &cli.command {
        Command::Analyze(a) => {
            let r = a.recipe.or(a.recipe_flag).context("no recipe given")?;
            ("analyze".to_owned(), recipes::name(r))
        }
        other => {
            let name = serde_json::to_value(other)?.as_object().and_then(|o| o.keys().next().cloned());
            (name.unwrap_or_else(|| "run".into()), String::new())
        }
    };
    let mut run = Run::new(cli, argv, &command, &label)?;
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&mut run, a),
        Command::Sample(a) => commands::sample(&mut run, a),
        Command::Chop(a) => commands::chop(&mut run, a),
        Command::Spectrum(a) => commands::spectrum(&mut run, a),
        Command::Unfold(a) => commands::unfold(&mut run, a),
        Command::Spacing(a) => commands::spacing(&mut run, a),
        Command::Density(a) => commands::density(&mut run, a),
        Command::Tw(a) => commands::tw(&mut run, a),
        Command::Fit(a) => commands::fit(&mut run, a),
        Command::Analyze(a) => {
            let r = a.recipe.or(a.recipe_flag).expect("checked above");
            recipes::run_recipe(&mut run, r, a)
        }
    }?;
    run.finish()
}

/// Config expansion, parsing and execution; returns the process exit code.
pub fn main_with_args(argv: Vec<OsString>) -> i32 {
    use clap::Parser;
    let argv = match config::expand_args(argv, args::SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli, &argv) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: outputs written, but some checks failed (see the manifest)");
            3
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
