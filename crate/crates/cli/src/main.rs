//! `cvsim`: runs the seeded experiments and writes a versioned report.
//!
//! Exit status is 0 when every declared tolerance passes, 1 when any check
//! fails, and 2 on configuration or runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use cvsim::experiments::{Experiment, ExperimentConfig, ExperimentReport, OutputFormat, ReportSet};

#[derive(Debug, Parser)]
#[command(name = "cvsim", version, about = "Truncated Fock-space CV optics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration merged over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials for every experiment.
    #[arg(long, global = true)]
    trials: Option<u32>,

    /// Report destination (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Photon undercounting of a multiplexed threshold-detector tree.
    Undercount,
    /// Detector-count and phase-resolution scaling with n_max.
    Scaling,
    /// Cubic phase gate protocol and heralded cubic phase states.
    CubicGate,
    /// Kerr QND counting modulo the period.
    Kerr,
    /// Pointer counting without aliasing.
    Pointer,
    /// Every experiment in turn.
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Command {
    fn experiments(self) -> Vec<Experiment> {
        match self {
            Self::Undercount => vec![Experiment::Undercount],
            Self::Scaling => vec![Experiment::Scaling],
            Self::CubicGate => vec![Experiment::CubicGate],
            Self::Kerr => vec![Experiment::Kerr],
            Self::Pointer => vec![Experiment::Pointer],
            Self::All => Experiment::ALL.to_vec(),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.set_trials(trials);
    }
    if let Some(out) = &cli.out {
        config.output.path = Some(out.display().to_string());
    }
    if let Some(format) = cli.format {
        config.output.format = match format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool, String> {
    let config = load_config(cli)?;
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let mut reports: Vec<ExperimentReport> = Vec::new();
    for experiment in cli.command.experiments() {
        let start = Instant::now();
        let report = experiment.run(&config).map_err(|e| format!("{}: {e}", experiment.name()))?;
        // timing goes to stderr so reports stay byte-reproducible
        eprintln!(
            "{}: {} in {:.2}s",
            experiment.name(),
            if report.passed { "pass" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for check in report.checks.iter().filter(|c| !c.passed) {
            eprintln!("  failed {}: {}", check.name, check.detail);
        }
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    let text = match (config.output.format, reports.len()) {
        (OutputFormat::Json, 1) => reports[0].to_json(),
        (OutputFormat::Csv, 1) => reports[0].to_csv().map_err(|e| e.to_string())?,
        (OutputFormat::Json, _) => ReportSet::new(config.seed, reports).to_json(),
        (OutputFormat::Csv, _) => ReportSet::new(config.seed, reports).to_csv().map_err(|e| e.to_string())?,
    };
    match &config.output.path {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| format!("{path}: {e}"))?,
        None => println!("{text}"),
    }
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
