//! `thzqs`: spectrum maps, simulated scans, thickness analysis and the
//! induced-emission check for a terahertz nonlinear interferometer.
//!
//! Exit codes: 0 on success, 2 for invalid arguments or configuration, 1 for
//! failures while computing or reading inputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{AnalyzeOptions, Outputs, SimulateOptions};
use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(thzqs_core::Error),
}

impl From<thzqs_core::Error> for CliError {
    fn from(e: thzqs_core::Error) -> Self {
        match e {
            thzqs_core::Error::Config(m) => CliError::Validation(m),
            other => CliError::Runtime(other),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Stokes,
    Antistokes,
    All,
}

#[derive(Parser)]
#[command(name = "thzqs", version, about = "Terahertz nonlinear-interferometer simulation and thickness analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format for tables and traces.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Frequency-angular spectrum map.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Branches to compute; the configured list when omitted.
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
        /// Crystal temperature override (K).
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Simulated reference and sample scans.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Branches to compute; the configured list when omitted.
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
        /// Block the idler arm.
        #[arg(long)]
        blocked: bool,
        /// Expected values without any noise.
        #[arg(long)]
        noiseless: bool,
        /// Overrides the number of repeats per point.
        #[arg(long)]
        repeats: Option<usize>,
        /// Crystal temperature override (K).
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Fit reference and sample scans and report the plate thickness.
    Analyze {
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Reference scans, one per branch.
        #[arg(long, num_args = 1.., required = true)]
        reference: Vec<PathBuf>,
        /// Sample scans, one per branch.
        #[arg(long, num_args = 1.., required = true)]
        sample: Vec<PathBuf>,
        /// Plate refractive index.
        #[arg(long = "n")]
        index: f64,
        /// Standard uncertainty of the refractive index.
        #[arg(long = "sigma-n", default_value_t = 0.0)]
        index_sigma: f64,
        /// Caliper thickness for the table (m).
        #[arg(long)]
        caliper_m: Option<f64>,
    },
    /// Pump-power linearity and blocked/unblocked ratios.
    CheckGain {
        #[command(flatten)]
        common: Common,
        /// Expected values without any noise.
        #[arg(long)]
        noiseless: bool,
    },
}

fn with_temperature(mut c: RunConfig, t: Option<f64>) -> RunConfig {
    if let Some(t) = t {
        c.crystal.temperature_k = t;
    }
    c
}

fn run(cli: Cli) -> Result<(Outputs, PathBuf), CliError> {
    match cli.command {
        Command::Spectrum { common, branch, temperature } => {
            let c = with_temperature(common.load()?, temperature);
            Ok((commands::spectrum(&c, branch, common.format)?, common.out))
        }
        Command::Simulate { common, branch, blocked, noiseless, repeats, temperature } => {
            let c = with_temperature(common.load()?, temperature);
            let opts = SimulateOptions { branch, blocked, noiseless, repeats, format: common.format };
            Ok((commands::simulate(&c, &opts)?, common.out))
        }
        Command::Analyze { out, reference, sample, index, index_sigma, caliper_m } => {
            let opts = AnalyzeOptions { reference: &reference, sample: &sample, index, index_sigma, caliper_m };
            Ok((commands::analyze(&opts)?, out))
        }
        Command::CheckGain { common, noiseless } => {
            let c = common.load()?;
            Ok((commands::check_gain(&c, noiseless, common.format)?, common.out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(outputs, dir)| outputs.write(&dir));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("thzqs: {e}");
            match e {
                CliError::Validation(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
