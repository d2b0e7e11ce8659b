use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qpf_cli::{run, write_outputs, Command, Experiment, Result};

/// Schrödinger operators on weighted graphs: exact traces, semiclassical
/// sweeps and Feynman-Kac Monte Carlo.
#[derive(Debug, Parser)]
#[command(name = "qpf", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `params.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

fn execute(args: &Args) -> Result<Option<qpf_cli::CliError>> {
    let mut exp = Experiment::from_file(&args.config)?;
    if let Some(w) = args.workers {
        exp.params.workers = w;
    }
    let dir = args.output_dir.clone().unwrap_or_else(|| exp.output_dir.clone());
    let out = run(&exp, args.command)?;
    write_outputs(&dir, &out)?;
    Ok(out.failure)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let err = match execute(&args) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => e,
    };
    eprintln!("{}", err.record());
    ExitCode::from(err.exit_code() as u8)
}
