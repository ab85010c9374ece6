//! `noe`: thermal and real-time normal-ordered exponential propagation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Mode, RunConfig};
use report::{manifest_json, Artifacts};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] noe_core::NoeError),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "noe", version, about = "Normal-ordered exponential propagation in inverse temperature and real time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fermionic one-body thermal trajectory from β = 0.
    FermionThermal(Args),
    /// Bosonic quadratic thermal trajectory from a low-temperature start.
    BosonThermal(Args),
    /// Franck-Condon autocorrelation function and spectrum.
    FcSpectrum(Args),
    /// Occupation ODEs of a single oscillator for three statistics.
    StatisticsDemo(Args),
    /// Run the oracle comparison suite.
    Verify(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let (mode, args) = match cli.command {
        Command::FermionThermal(a) => (Mode::FermionThermal, a),
        Command::BosonThermal(a) => (Mode::BosonThermal, a),
        Command::FcSpectrum(a) => (Mode::FcSpectrum, a),
        Command::StatisticsDemo(a) => (Mode::StatisticsDemo, a),
        Command::Verify(a) => (Mode::Verify, a),
    };
    let base = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let env_output = std::env::var_os("NOE_OUTPUT_DIR").map(PathBuf::from);
    let cfg = base.overlay(&args.run).resolve(mode, env_output)?;
    let mut out = Artifacts::new(cfg.output.as_deref().expect("resolved"))?;
    let result = run::run(&cfg, &mut out);
    let files = out.files.clone();
    out.write("manifest.json", &manifest_json(&cfg, &files, start.elapsed().as_secs_f64()))?;
    result
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
