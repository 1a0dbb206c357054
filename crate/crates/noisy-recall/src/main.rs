use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use noisy_recall::{run_experiment, ExperimentConfig, ExperimentKind, RunError};

/// Run a noisy associative-memory experiment and write its CSVs.
#[derive(Debug, Parser)]
#[command(name = "noisy-recall", version)]
struct Cli {
    /// TOML config (a previous run's manifest.toml works too).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for trial streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Experiment kind; overrides the config.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path, cli.experiment)?,
        None => ExperimentConfig::defaults(cli.experiment.unwrap_or(ExperimentKind::SerSweep)),
    };
    if let Some(seed) = cli.seed {
        config.experiment.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.experiment.workers = workers;
    }
    if let Some(out) = &cli.out {
        config.experiment.out = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are config errors; help and version are not errors
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = resolve(&cli).and_then(|config| run_experiment(&config));
    match result {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
