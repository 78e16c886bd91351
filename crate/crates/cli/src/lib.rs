//! Batch front end: `ingest`, `pathloss`, `cir`, `simulate` and `report`.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 analysis error.

mod commands;
pub mod manifest;
mod store;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};

pub use store::{load_store, locations, Location};

#[derive(Debug, Parser)]
#[command(
    name = "vvlc",
    version,
    about = "NLoS vehicular VLC channel analysis and link simulation"
)]
pub struct Cli {
    /// Root directory for the sweep store and outputs.
    #[arg(long, global = true, env = "VVLC_DATA_DIR", default_value = "vvlc-data")]
    pub data_dir: PathBuf,
    /// Run configuration (TOML); flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse Touchstone or sweep CSV files into the canonical sweep store.
    Ingest(IngestArgs),
    /// Per-distance path loss and a fit of the empirical model.
    Pathloss(PathlossArgs),
    /// Impulse responses, FWHM table and optional WDGF fits.
    Cir(CirArgs),
    /// Monte Carlo BER versus distance for one scenario.
    Simulate(SimulateArgs),
    /// The six day/night surface scenarios and their achievable distances.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Auto,
    Touchstone,
    Csv,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Files or directories (non-recursive).
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: InputFormat,
    /// Store directory [default: <data-dir>/sweeps]
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathlossArgs {
    #[arg(long)]
    pub surface: Option<String>,
    #[arg(long)]
    pub d0: Option<f64>,
    /// Path loss at d0, dB [default: measured at d0]
    #[arg(long)]
    pub pl_ref: Option<f64>,
    /// Lambertian scene (TOML) for the benchmark column.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowArg {
    None,
    Hann,
}

#[derive(Debug, Args)]
pub struct CirArgs {
    /// Only this surface.
    #[arg(long)]
    pub surface: Option<String>,
    /// Transform bandwidth, Hz [default: 1 ns resolution]
    #[arg(long)]
    pub f_target: Option<f64>,
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    #[arg(long)]
    pub fit_wdgf: bool,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario, e.g. day-white.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Surface label.
    #[arg(long)]
    pub surface: Option<String>,
    #[arg(long)]
    pub d0: Option<f64>,
    /// Surface path loss at d0, dB.
    #[arg(long)]
    pub pl_ref: Option<f64>,
    #[arg(long)]
    pub max_bits: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shared LoS path loss at d0, dB [default: calibrated]
    #[arg(long)]
    pub pl_ref: Option<f64>,
    #[arg(long)]
    pub max_bits: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys of the `--config` file. Each is overridden by the matching flag.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub surface: Option<String>,
    pub d0: Option<f64>,
    pub pl_ref: Option<f64>,
    pub f_target: Option<f64>,
    pub window: Option<WindowArg>,
    pub fit_wdgf: Option<bool>,
    pub scene: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String), Failure> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .input()?;
        let cfg = toml::from_str(&text)
            .with_context(|| format!("in {}", path.display()))
            .input()?;
        Ok((cfg, text))
    }
}

/// A failed run and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Analysis(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Analysis(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) | Failure::Analysis(e) => write!(f, "{e:#}"),
        }
    }
}

pub(crate) trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn analysis(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
    fn analysis(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Analysis(e.into()))
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")
            .input()?;
    }
    let (cfg, cfg_text) = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => Default::default(),
    };
    let ctx = commands::Ctx {
        data_dir: cli.data_dir,
        cfg,
        cfg_text,
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest(&ctx, a),
        Command::Pathloss(a) => commands::pathloss(&ctx, a),
        Command::Cir(a) => commands::cir(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    }
}
