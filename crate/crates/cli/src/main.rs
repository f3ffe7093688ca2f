use std::path::PathBuf;
use std::process::ExitCode;

use biolearn_cli::{cmd_curves, cmd_filters, cmd_run, RunOptions, EXIT_USAGE};
use clap::{Parser, Subcommand};

/// Benchmark biologically inspired learning rules against backprop.
#[derive(Debug, Parser)]
#[command(name = "biolearn", version)]
struct Cli {
    /// Worker threads (default: one per hardware thread).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Directory holding the CIFAR binary batches.
    #[arg(long, global = true, env = "BIOLEARN_DATA_DIR", value_name = "PATH")]
    data_dir: Option<PathBuf>,
    /// Train on the bundled synthetic dataset instead of CIFAR.
    #[arg(long, global = true)]
    synthetic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every experiment in a config file.
    Run { config: PathBuf },
    /// Render first-layer filters of a checkpoint as a PPM image.
    Filters { checkpoint: PathBuf, out: PathBuf },
    /// Aggregate a runs.jsonl file into per-epoch mean/std curves.
    Curves { jsonl: PathBuf, out: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let options = RunOptions {
        threads: cli.threads.unwrap_or(0),
        data_dir: cli.data_dir,
        synthetic: cli.synthetic,
    };
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config, &options),
        Command::Filters { checkpoint, out } => cmd_filters(&checkpoint, &out),
        Command::Curves { jsonl, out } => cmd_curves(&jsonl, &out),
    };
    ExitCode::from(code as u8)
}
