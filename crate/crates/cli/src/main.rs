//! `secnav` — scenario generation, seeded navigation experiments, and plot
//! export for the safe-corridor navigation simulator.

mod experiment;
mod plotting;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

use secnav_core::scenario::{self, ScenarioError};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SECNAV_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Scenario(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "secnav", version, about = "Safe-corridor navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in scenario (three path classes on a square map).
    Generate(GenerateArgs),
    /// Run seeded navigation trials and write per-trial and summary reports.
    Run(Box<experiment::RunArgs>),
    /// Render map and metric plots from a results directory.
    Plot(PlotArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Output scenario file (default: `<out-dir>/scenario.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the deterministic landmark placement.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Map width in meters.
    #[arg(long, default_value_t = 200.0)]
    width: f64,
    /// Map height in meters.
    #[arg(long, default_value_t = 200.0)]
    height: f64,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// Results directory written by `secnav run`.
    #[arg(long)]
    results: PathBuf,
    /// Scenario file the results were produced from.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for the SVG files (default: the results directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Default output directory: `$SECNAV_OUT_DIR` or `./secnav_out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("secnav_out"))
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    if !(args.width.is_finite() && args.width > 0.0)
        || !(args.height.is_finite() && args.height > 0.0)
    {
        return Err(CliError::Config(format!(
            "map size must be positive, got {}x{}",
            args.width, args.height
        )));
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir().join("scenario.json"));
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("creating {}: {e}", parent.display())))?;
        }
    }
    let built = scenario::builtin_scenario_sized(args.seed, args.width, args.height);
    scenario::save_scenario(&built, &out)?;
    println!(
        "wrote scenario with {} landmarks, {} paths to {}",
        built.map.landmarks.len(),
        built.paths.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => experiment::cmd_run(args),
        Command::Plot(args) => plotting::cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
