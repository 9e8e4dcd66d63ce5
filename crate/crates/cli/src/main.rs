//! `simiscale`: analyze, generate, train, gridsearch, scale, validate.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "simiscale", version, about = "Similitude scaling with learned distortion correction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Single worker thread.
    #[arg(long, global = true)]
    pub serial: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate and rank Pi sets for a target quantity.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Simulate a multi-scale fleet on the linkage bench.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Fleet specification (TOML).
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Fit the prediction-factor regressor.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: TrainInputs,
    },
    /// Hyperparameter grid search.
    Gridsearch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: TrainInputs,
    },
    /// Predict the target on prototype records with a trained model.
    Scale {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Compare learned and classical scaling on records with known targets.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Dataset holding the baseline machine's rows (defaults to --data).
        #[arg(long)]
        reference_data: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TrainInputs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub pi_sets: Option<PathBuf>,
    /// Position of the set in the pi-set file.
    #[arg(long)]
    pub set_index: Option<usize>,
    /// Machine whose rows are candidates for the reference row.
    #[arg(long)]
    pub reference_machine: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
