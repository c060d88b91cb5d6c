use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcsfl_core::runner::{format_summary_text, format_summary_tsv, summarize, RawConfig};
use bcsfl_core::{run_experiment, ExperimentConfig, RunnerError};
use clap::{Args, Parser, Subcommand};
use log::info;

#[derive(Parser)]
#[command(name = "bcsfl", version, about = "Clustered federated learning simulator for UAV swarms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write one CSV row per round.
    Simulate(SimulateArgs),
    /// Summarize round CSV files per scheme.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// conventional, fca or kha.
    #[arg(long)]
    scheme: Option<String>,
    /// Hop radius for kha.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    uavs: Option<usize>,
    #[arg(long)]
    rounds: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// synthetic or mnist.
    #[arg(long)]
    dataset: Option<String>,
    /// iid or noniid.
    #[arg(long)]
    partition: Option<String>,
    /// CSV destination; defaults to the config's `out`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    /// Accuracy for rounds-to-threshold.
    #[arg(long, default_value_t = 0.9)]
    threshold: f64,
    /// Tab-separated output.
    #[arg(long)]
    tsv: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Summarize(args) => run_summary(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn config_failure(path: &Path, message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {message}", path.display()),
    }
}

fn load_config(args: &SimulateArgs) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| config_failure(&args.config, e))?;
    let mut raw = RawConfig::parse(&text).map_err(|e| config_failure(&args.config, e))?;
    let flags = [
        ("scheme", args.scheme.clone()),
        ("k", args.k.map(|v| v.to_string())),
        ("uavs", args.uavs.map(|v| v.to_string())),
        ("rounds", args.rounds.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("dataset", args.dataset.clone()),
        ("partition", args.partition.clone()),
    ];
    for (key, value) in flags {
        if let Some(value) = value {
            raw.set_flag(key, value).map_err(|e| config_failure(&args.config, e))?;
        }
    }
    ExperimentConfig::from_raw(&raw).map_err(|e| config_failure(&args.config, e))
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let config = load_config(&args)?;
    let out_path = args.out.clone().or_else(|| config.out.clone());
    let report = match &out_path {
        Some(path) => {
            let file = File::create(path).map_err(RunnerError::from)?;
            run_experiment(&config, BufWriter::new(file))?
        }
        None => run_experiment(&config, BufWriter::new(io::stdout().lock()))?,
    };
    info!(
        "{} layouts run, {} skipped, {} rows",
        report.layouts.len(),
        report.skipped.len(),
        report.metrics.len()
    );
    Ok(())
}

fn run_summary(args: SummarizeArgs) -> Result<(), Failure> {
    let rows = summarize(&args.csv, args.threshold)?;
    let text = if args.tsv {
        format_summary_tsv(&rows)
    } else {
        format_summary_text(&rows)
    };
    io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(RunnerError::from)?;
    Ok(())
}
