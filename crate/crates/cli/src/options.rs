use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use emfplan::platea::CombBudget;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "emfplan", version, about = "Plan 5G gNB deployments under EMF exposure limits")]
pub struct Cli {
    /// Worker threads (defaults to every core).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// JSON file with subcommand options; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic scenario (JSON plus baseline CSV).
    Gen(GenArgs),
    /// Run a planner and write the result, metrics and heatmaps.
    Plan(PlanArgs),
    /// Check a solution against every constraint family.
    Verify(VerifyArgs),
    /// Write the planning model in CPLEX LP format.
    ExportLp(ExportLpArgs),
    /// Run the planner over a parameter grid.
    Sweep(SweepArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Plan(_) => "plan",
            Command::Verify(_) => "verify",
            Command::ExportLp(_) => "export-lp",
            Command::Sweep(_) => "sweep",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Tmc,
    Small,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regulation {
    /// 6 V/m residential limit and 100 m from sensitive places.
    Rome,
    /// Same limits without the sensitive-place distance.
    Italy,
}

pub fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("{v} is not a positive number")),
        Err(e) => Err(e.to_string()),
    }
}

pub fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        Ok(v) => Err(format!("{v} is negative or not finite")),
        Err(e) => Err(e.to_string()),
    }
}

/// `linear`, `fixed:K` or `multiple:K`.
pub fn comb_budget(s: &str) -> Result<CombBudget, String> {
    let (rule, k) = match s.split_once(':') {
        Some((r, k)) => (r, Some(k.parse::<usize>().map_err(|e| format!("budget count: {e}"))?)),
        None => (s, None),
    };
    match (rule, k) {
        ("linear", None) => Ok(CombBudget::Linear),
        ("fixed", Some(k)) if k > 0 => Ok(CombBudget::Fixed(k)),
        ("multiple", Some(k)) if k > 0 => Ok(CombBudget::Multiple(k)),
        _ => Err(format!("unknown budget rule {s:?}; use linear, fixed:K or multiple:K")),
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "tmc")]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenario JSON path; the baseline CSV and manifest go next to it.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_parser = positive_f64)]
    pub pixel_size: Option<f64>,
    #[arg(long, value_parser = positive_f64)]
    pub area_km2: Option<f64>,
    /// Micro-cell candidate sites.
    #[arg(long)]
    pub n_f1: Option<usize>,
    /// Macro-cell candidate sites.
    #[arg(long)]
    pub n_f2: Option<usize>,
    /// Roof-top sites allowed on both bands.
    #[arg(long)]
    pub n_dual: Option<usize>,
    #[arg(long)]
    pub sensitive_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub regulation: Option<Regulation>,
    /// Uniform pre-existing field on every pixel, V/m, split evenly across bands.
    #[arg(long, value_parser = non_negative_f64)]
    pub pre5g: Option<f64>,
    /// Turn shadow fading off.
    #[arg(long)]
    #[serde(default)]
    pub no_fading: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Platea,
    Ea,
    Mcma,
    Exhaustive,
}

/// Planner settings shared by `plan` and `sweep`.
#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct PlannerArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Revenue per pixel served on the first band, EUR.
    #[arg(long, value_parser = non_negative_f64)]
    pub alpha_f1: Option<f64>,
    /// Revenue per pixel served on the second band, EUR.
    #[arg(long, value_parser = non_negative_f64)]
    pub alpha_f2: Option<f64>,
    /// Sampled combinations per size: linear, fixed:K or multiple:K.
    #[arg(long, value_parser = comb_budget)]
    pub comb_budget: Option<CombBudget>,
    /// Keep growing the second band after every pixel is served.
    #[arg(long)]
    #[serde(default)]
    pub no_early_stop: bool,
    #[arg(long, default_value_t = 0)]
    pub f1_band: usize,
    #[arg(long, default_value_t = 1)]
    pub f2_band: usize,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct PlanArgs {
    #[arg(short, long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "platea")]
    pub algo: Algo,
    #[command(flatten)]
    #[serde(flatten)]
    pub planner: PlannerArgs,
    /// First-band gNBs (ea, mcma).
    #[arg(long)]
    pub num_f1: Option<usize>,
    /// Second-band gNBs (ea).
    #[arg(long)]
    pub num_f2: Option<usize>,
    /// Stop exhaustive search after this many seconds.
    #[arg(long, value_parser = positive_f64)]
    pub time_budget_s: Option<f64>,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[command(group(ArgGroup::new("input").required(true).args(["solution", "result"])))]
pub struct VerifyArgs {
    #[arg(short, long)]
    pub scenario: PathBuf,
    /// Solution as `name value` lines.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Result JSON written by `plan`.
    #[arg(long)]
    pub result: Option<PathBuf>,
    #[arg(long, value_parser = non_negative_f64)]
    pub alpha_f1: Option<f64>,
    #[arg(long, value_parser = non_negative_f64)]
    pub alpha_f2: Option<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ExportLpArgs {
    #[arg(short, long)]
    pub scenario: PathBuf,
    #[arg(long, value_parser = non_negative_f64)]
    pub alpha_f1: Option<f64>,
    #[arg(long, value_parser = non_negative_f64)]
    pub alpha_f2: Option<f64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Revenue on both bands: `--values` for the first, `--values2` for the second.
    Alpha,
    /// Time scaling (`--values`) by statistical scaling (`--values2`).
    Scaling,
    DMin,
    /// Pre-existing field, V/m.
    Pre5g,
    Reuse,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(short, long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub values2: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub planner: PlannerArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this location instead of the recorded one.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
