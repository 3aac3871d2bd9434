use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use streamad_cli::{load_config, run, Overrides, RunOptions};

/// Run a streaming anomaly detection pipeline over a stream and evaluate it.
#[derive(Debug, Parser)]
#[command(name = "streamad", version)]
struct Args {
    /// TOML run configuration.
    config: PathBuf,

    /// Replace the CSV input path from the config.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Replace the scores output path.
    #[arg(long)]
    scores: Option<PathBuf>,

    /// Replace the report output path.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Replace the seed (TOML integers top out at i64::MAX).
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,

    /// Record wall-clock seconds in the report.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        input: args.input,
        scores: args.scores,
        report: args.report,
        seed: args.seed,
    };
    let outcome = load_config(&args.config).and_then(|mut config| {
        overrides.apply(&mut config)?;
        run(
            &config,
            &RunOptions {
                timing: args.timing,
            },
        )
    });
    match outcome {
        Ok(summary) => {
            println!("{} instances", summary.n);
            println!("{}", summary.summary_line());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("streamad: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
