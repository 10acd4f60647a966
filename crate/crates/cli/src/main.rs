use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use meterdp_cli::{execute, load_dataset, parse_rational, AuditMode, CliError, Mode, RunConfig};
use num_rational::BigRational;

/// Differentially private release of the column sums of a 0/1 dataset.
#[derive(Debug, Parser)]
#[command(name = "meterdp", version)]
struct Args {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Privacy budget, as a decimal (`0.5`, `1e-3`) or a fraction (`1/3`).
    #[arg(long, value_parser = rational)]
    epsilon: BigRational,
    /// Required in approx mode, rejected in pure mode.
    #[arg(long, value_parser = rational)]
    delta: Option<BigRational>,
    /// Number of shifts; defaults to the number of columns.
    #[arg(long)]
    s: Option<u64>,
    /// Seed for a reproducible run. Without it bits come from the OS.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV with a header row and one 0/1 column per predicate.
    #[arg(long)]
    input: PathBuf,
    /// Report destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    audit: AuditMode,
    /// Mechanism runs per audit.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
}

fn rational(s: &str) -> Result<BigRational, String> {
    parse_rational(s)
}

fn run(args: Args) -> Result<(), CliError> {
    let counts = load_dataset(&args.input)?;
    let cfg = RunConfig {
        mode: args.mode,
        epsilon: args.epsilon,
        delta: args.delta,
        s: args.s,
        seed: args.seed,
        audit: args.audit,
        trials: args.trials,
    };
    let report = execute(&cfg, &counts)?;
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("meterdp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
