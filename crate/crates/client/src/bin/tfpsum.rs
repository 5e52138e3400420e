use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tfpaas_core::sumscore::{parse_sum_inputs, render_table};

/// Single Usability Metric from raw usability measurements.
///
/// The input holds `key=value` lines: task_times, ideal_time, errors,
/// opportunities, completed, attempted, ratings and optionally weights.
#[derive(Parser)]
#[command(name = "tfpsum", version)]
struct Cli {
    #[arg(long)]
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("E_IO: {}: {e}", cli.input.display());
            return ExitCode::from(5);
        }
    };
    let report = parse_sum_inputs::<f64>(&text).and_then(|(inputs, weights)| inputs.score(weights));
    match report {
        Ok(r) => {
            print!("{}", render_table(&r));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: {e}", cli.input.display());
            ExitCode::from(2)
        }
    }
}
