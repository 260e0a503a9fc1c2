//! `dpasr` — fit a grammar-derived differentiable program architecture to
//! samples of a PDE solution, prune it, and report the resulting
//! closed-form expression.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[macro_use]
mod log;
mod commands;
mod config;
mod error;

use commands::Paths;
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "dpasr", version, about = "Symbolic regression for PDE solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the benchmark dataset (CSV + manifest).
    Dataset(CommonArgs),
    /// Train one architecture per output variable.
    Train(CommonArgs),
    /// Prune trained architectures depth-first by weight magnitude.
    Prune(CommonArgs),
    /// Write the expression report for (pruned) models.
    Extract(CommonArgs),
    /// Evaluate models on held-out points and write the results table.
    Report(CommonArgs),
    /// Run dataset, train, prune, extract, and report in sequence.
    Pipeline(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configuration's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Process output variables on separate threads.
    #[arg(long)]
    parallel_outputs: bool,
}

fn run(command: &Command) -> Result<(), CliError> {
    let args = match command {
        Command::Dataset(a)
        | Command::Train(a)
        | Command::Prune(a)
        | Command::Extract(a)
        | Command::Report(a)
        | Command::Pipeline(a) => a,
    };
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| CliError::config("no output directory: set `out_dir` in the config or pass --out"))?;
    config.out_dir = Some(out_dir.clone());
    let paths = Paths::new(&out_dir);
    log_debug!("config hash {}", config.config_hash());
    match command {
        Command::Dataset(_) => commands::cmd_dataset(&config, &paths),
        Command::Train(_) => commands::cmd_train(&config, &paths, args.parallel_outputs),
        Command::Prune(_) => commands::cmd_prune(&config, &paths, args.parallel_outputs),
        Command::Extract(_) => commands::cmd_extract(&config, &paths),
        Command::Report(_) => commands::cmd_report(&config, &paths, args.parallel_outputs),
        Command::Pipeline(_) => commands::cmd_pipeline(&config, &paths, args.parallel_outputs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dpasr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
