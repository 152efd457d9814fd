use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "rmt", version, about = "Random-matrix spectral analysis of return panels", args_override_self = true)]
pub struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Flat key = value file; explicit flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Prices to normalised log-returns.
    Ingest(IngestArgs),
    /// Sample a Wishart-Laguerre or power-law ensemble.
    Sample(SampleArgs),
    /// Chop one panel into an ensemble (Method 1 or 2).
    Chop(ChopArgs),
    /// Spectrum of a panel, or pooled histogram of an ensemble.
    Spectrum(SpectrumArgs),
    /// Unfold an ensemble and emit global spacings.
    Unfold(UnfoldArgs),
    /// Individual spacings of an ensemble, or spacing laws.
    Spacing(SpacingArgs),
    /// Tabulate the Marčenko-Pastur or power-law density.
    Density(DensityArgs),
    /// Tracy-Widom table or rescaled extremes.
    Tw(TwArgs),
    /// Fit the tail parameter alpha.
    Fit(FitArgs),
    /// Run a recipe end to end.
    Analyze(AnalyzeArgs),
}

pub const SUBCOMMANDS: &[&str] = &["ingest", "sample", "chop", "spectrum", "unfold", "spacing", "density", "tw", "fit", "analyze"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    Prices,
    Returns,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PanelArgs {
    /// Delimited table: header of asset ids, timestamps in the first column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputKind::Prices)]
    pub input_kind: InputKind,
    /// Field separator (sniffed from the header when absent).
    #[arg(long)]
    pub delimiter: Option<char>,
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub drop_incomplete: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    Wl,
    Gen,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub ensemble: EnsembleKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub t: usize,
    /// Required for the power-law ensemble.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChopArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub method: u8,
    /// Window length.
    #[arg(long)]
    pub t: usize,
    /// Asset block size (method 2).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub renormalize: bool,
    /// Number of randomly permuted method-2 ensembles to add.
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,
    /// Keep the given asset order as permutation 0.
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub include_identity: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Ensemble file; pooled unit-mean histogram instead of a panel spectrum.
    #[arg(long, conflicts_with = "input")]
    pub ensemble: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct UnfoldArgs {
    /// Ensemble file.
    #[arg(long = "in", alias = "input")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long, default_value_t = 5)]
    pub degree: usize,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Start the counting grid at zero instead of the smallest eigenvalue.
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub from_zero: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingMode {
    Individual,
    Theory,
}

#[derive(Debug, Args, Serialize)]
pub struct SpacingArgs {
    #[arg(long, value_enum)]
    pub mode: SpacingMode,
    /// Ensemble file (individual mode).
    #[arg(long = "in", alias = "input")]
    pub input: Option<PathBuf>,
    /// Gap index, 1..N-1; gap k lies between 0-based eigenvalues k-1 and k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Adds the generalised surmise column (theory mode).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Mp,
    Gen,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long, value_enum)]
    pub kind: DensityKind,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    /// Upper end of the grid; defaults to 1.5x the support edge (mp) or 20 (gen).
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeArg {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Analytic constants for sampled Wishart ensembles, moment matching otherwise.
    Auto,
    Analytic,
    Moment,
}

#[derive(Debug, Args, Serialize)]
pub struct TwArgs {
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub table: bool,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub rescale: bool,
    /// Ensemble file (rescale mode).
    #[arg(long = "in", alias = "input")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EdgeArg::Largest)]
    pub edge: EdgeArg,
    #[arg(long, value_enum, default_value_t = Scaling::Auto)]
    pub scaling: Scaling,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitTargetArg {
    Density,
    Spacing,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub target: FitTargetArg,
    /// Density: ensemble file (or plain values with --c). Spacing: values file.
    #[arg(long = "in", alias = "input")]
    pub input: PathBuf,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    FigSpacingGen,
    FigTwMc,
    FigDensityFit,
    FigGlobalSpacing,
    FigChopTw,
    FigChopSpacing,
    AppendixPermutations,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(value_enum, required_unless_present = "recipe_flag")]
    pub recipe: Option<Recipe>,
    /// Same as the positional recipe; lets config files name it.
    #[arg(long = "recipe", value_enum)]
    pub recipe_flag: Option<Recipe>,
    /// Panel for the data recipes; a synthetic panel is generated when absent.
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub method: Option<u8>,
    #[arg(long)]
    pub permutations: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Synthetic panel rows, columns, regime length and tail parameter.
    #[arg(long, default_value_t = 970)]
    pub synthetic_t: usize,
    #[arg(long, default_value_t = 401)]
    pub synthetic_n: usize,
    #[arg(long, default_value_t = 10)]
    pub synthetic_block: usize,
    #[arg(long, default_value_t = 1.0)]
    pub synthetic_alpha: f64,
}
