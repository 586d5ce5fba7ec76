//! Batch experiment runner for the `powerdiv` library.
//!
//! Each subcommand runs one experiment kind over a grid of orders, sample
//! sizes and thresholds and writes one row per grid point as CSV or JSON
//! lines. Exit codes: 0 on success, 2 on config errors, 3 on capacity
//! errors, 1 on I/O errors.

pub mod config;
pub mod error;
pub mod family;
pub mod row;
pub mod run;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, FileConfig, Format, Kind, MethodPref, Overrides, OUT_DIR_ENV};
pub use error::{CliError, Result};
pub use family::Family;
pub use row::{emit, read_csv, ResultRow, COLUMNS};
pub use run::run;

#[derive(Debug, Parser)]
#[command(
    name = "powerdiv",
    version,
    about = "Power-divergence goodness-of-fit experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo mean of D_α(P̂_n, Q) along the grid.
    Stat(CommonArgs),
    /// Error function P(D_α > Δ), exact or Monte Carlo.
    Tail(CommonArgs),
    /// Empirical Bahadur slope −(c_α(n)/n) ln P(D_α > Δ).
    Slope(CommonArgs),
    /// Bahadur efficiency of the first order against each other order.
    Efficiency(CommonArgs),
    /// Minimum information divergence subject to a Rényi constraint.
    Projection(CommonArgs),
    /// Regularity and identifiability diagnostics for a schedule.
    Assumptions(CommonArgs),
    /// Contiguity diagnostic for a schedule.
    Contiguity(CommonArgs),
    /// Growth of generating-sequence ratios at matched sample sizes.
    Asymptotics(CommonArgs),
}

impl Command {
    pub fn split(self) -> (Kind, CommonArgs) {
        match self {
            Command::Stat(a) => (Kind::Stat, a),
            Command::Tail(a) => (Kind::Tail, a),
            Command::Slope(a) => (Kind::Slope, a),
            Command::Efficiency(a) => (Kind::Efficiency, a),
            Command::Projection(a) => (Kind::Projection, a),
            Command::Assumptions(a) => (Kind::Assumptions, a),
            Command::Contiguity(a) => (Kind::Contiguity, a),
            Command::Asymptotics(a) => (Kind::Asymptotics, a),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON experiment config.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output file; defaults to $POWERDIV_OUT_DIR/<kind>.<ext>, else stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Monte Carlo replicates.
    #[arg(long, value_name = "N")]
    pub reps: Option<u64>,
    /// Largest type count enumerated exactly.
    #[arg(long, value_name = "N")]
    pub exact_budget: Option<u64>,
    /// Orders, comma separated.
    #[arg(long = "alpha", value_delimiter = ',', value_name = "A")]
    pub alphas: Option<Vec<f64>>,
    /// Sample sizes, comma separated and increasing.
    #[arg(long = "n", value_delimiter = ',', value_name = "N")]
    pub n_grid: Option<Vec<u64>>,
    /// Thresholds, comma separated.
    #[arg(long = "delta", value_delimiter = ',', value_name = "D")]
    pub deltas: Option<Vec<f64>>,
    /// Constant cell count, replacing the configured k rule.
    #[arg(long, value_name = "K")]
    pub k: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodPref>,
    /// Fill the runtime_ms column (output is then no longer reproducible).
    #[arg(long)]
    pub timings: bool,
}

impl CommonArgs {
    pub fn overrides(&self, kind: Kind) -> Overrides {
        Overrides {
            kind: Some(kind),
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
            reps: self.reps,
            exact_budget: self.exact_budget,
            alphas: self.alphas.clone(),
            n_grid: self.n_grid.clone(),
            deltas: self.deltas.clone(),
            k: self.k,
            method: self.method,
            timings: self.timings,
        }
    }
}

/// Resolves the config, runs it and writes the output.
pub fn execute(kind: Kind, args: &CommonArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => FileConfig::from_path(path)?,
        None => FileConfig::default(),
    };
    let config = ExperimentConfig::resolve(file, args.overrides(kind))?;
    let rows = run(&config)?;
    match config.output_path() {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(&path)?);
            emit(&rows, config.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            emit(&rows, config.format, stdout.lock())?;
        }
    }
    Ok(())
}

pub fn cli_main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match execute(kind, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("powerdiv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
