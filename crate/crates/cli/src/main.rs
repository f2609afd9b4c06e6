//! `cabinlight`: inference, experiments, surfaces, rule files and the HTTP service.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 an experiment
//! run did not converge.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use cabinlight_core::{Activity, Chronotype, UserPolicy};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cabinlight", version, about = "Adaptive cabin lighting controller")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the suggested intensity for one input state.
    Infer(InferArgs),
    /// Run a preset experiment for one or more learning rates.
    Experiment(ExperimentArgs),
    /// Write the output surface over two variables.
    Surface(SurfaceArgs),
    /// Export or import the rule base.
    Rules(RulesArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub dgi: f64,
    #[arg(long)]
    pub age: f64,
    /// sleeping, eating, entertainment (or code 2, 3, 5)
    #[arg(long)]
    pub activity: Activity,
    /// morning, intermediate, evening (or code 5, 15, 25)
    #[arg(long)]
    pub chronotype: Chronotype,
    /// Use the adapted state stored in a profile document.
    #[arg(long, conflicts_with = "rules")]
    pub profile: Option<PathBuf>,
    /// Use consequents from a rule file.
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// 1: TV at dusk (62), 2: meal in glare (100), 3: before sleep (35)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub set: u8,
    /// Comma-separated learning rates applied to consequents and Q-tables.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub eta: Vec<f64>,
    /// Mean learning rate.
    #[arg(long, default_value_t = 0.002)]
    pub eta_m: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// full, partial:<fraction>, noisy:<stddev> or band:<width>
    #[arg(long, default_value = "full")]
    pub policy: UserPolicy,
    #[arg(long, default_value_t = 500)]
    pub max_trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tol: f64,
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Two distinct variables, e.g. `dgi,age`.
    #[arg(long, default_value = "dgi,age")]
    pub vars: String,
    /// Values for the other variables, e.g. `activity=eating,chronotype=morning`.
    #[arg(long, default_value = "")]
    pub fix: String,
    #[arg(long, default_value_t = 50)]
    pub res: usize,
    /// `lo,hi` for the first variable instead of its full domain.
    #[arg(long)]
    pub range_a: Option<String>,
    /// `lo,hi` for the second variable.
    #[arg(long)]
    pub range_b: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct RulesArgs {
    /// Write the generated rule base.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Validate a rule file and print the anchor outputs it produces.
    #[arg(long)]
    pub import: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value = "profiles")]
    pub data_dir: PathBuf,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
    NotConverged(String),
}

impl From<cabinlight_core::Error> for Failure {
    fn from(e: cabinlight_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Infer(a) => commands::infer(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Surface(a) => commands::surface(&a),
        Command::Rules(a) => commands::rules(&a),
        Command::Serve(a) => commands::serve(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}
