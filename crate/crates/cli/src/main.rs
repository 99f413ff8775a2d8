//! `hcbits` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::{BenchArgs, EvalArgs, GenPoolArgs, GenSynthArgs, RetrieveArgs, SelectArgs};

#[derive(Parser, Debug)]
#[command(name = "hcbits", version, about = "Binary patch descriptors selected by hill climbing on the AUC")]
#[command(args_override_self = true)]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// `key = value` file with default option values; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for output files whose path is not given explicitly.
    #[arg(long, global = true, env = "HCBITS_OUT", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a pool of candidate bits and write it to a pool file.
    GenPool(GenPoolArgs),
    /// Generate a synthetic pair set or a synthetic retrieval database.
    GenSynth(GenSynthArgs),
    /// Select b bits from a pool on a training pair set.
    Select(SelectArgs),
    /// Evaluate descriptors on a test pair set (ROC, AUC, FPR at 95% TPR).
    Eval(EvalArgs),
    /// Run keypoint retrieval over an image database.
    Retrieve(RetrieveArgs),
    /// Time cache construction and selection separately.
    Bench(BenchArgs),
}

fn run(cli: Cli) -> hcbits::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(hcbits::Error::Param("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| hcbits::Error::Usage(format!("cannot configure the thread pool: {e}")))?;
    }
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::GenPool(a) => commands::gen_pool(a, out),
        Command::GenSynth(a) => commands::gen_synth(a, out),
        Command::Select(a) => commands::select(a, out),
        Command::Eval(a) => commands::eval(a, out),
        Command::Retrieve(a) => commands::retrieve(a, out),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cmd = Cli::command();
    let args = match config::merge(&cmd, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("hcbits: {e}");
            return ExitCode::from(if e.is_usage() { 1 } else { 2 });
        }
    };
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hcbits: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
