//! `recat` command line: toy data generation, denoiser training,
//! guided sampling, metric evaluation, guidance sweeps, and a model
//! complexity report, all sharing one run directory.

mod checkpoint;
mod commands;
mod config;
mod error;
mod image;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "recat", version, about = "Toy latent try-on pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the run's dataset.
    #[command(name = "gen-data")]
    GenData(Common),
    /// Train the denoiser, resuming from an existing checkpoint.
    Train(Common),
    /// Write sample grids and a contact-sheet PNG for a few test scenes.
    Sample(Common),
    /// Score paired and unpaired metrics into eval.csv.
    Eval(Common),
    /// Evaluate a grid of guidance scales into sweep.csv and sweep.png.
    Sweep(Common),
    /// Print parameter and FLOP counts for the configured model.
    Complexity(Common),
}

impl Cmd {
    fn common(&self) -> &Common {
        match self {
            Cmd::GenData(c) | Cmd::Train(c) | Cmd::Sample(c) | Cmd::Eval(c) | Cmd::Sweep(c)
            | Cmd::Complexity(c) => c,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON config file; omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override train.seed and data.seed together.
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory for inputs and outputs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn init_logging() -> Result<()> {
    let level = match std::env::var("RECAT_LOG") {
        Ok(v) => match v.as_str() {
            "error" => log::LevelFilter::Error,
            "info" => log::LevelFilter::Info,
            "debug" => log::LevelFilter::Debug,
            other => {
                return Err(CliError::Config(format!(
                    "RECAT_LOG: expected error, info, or debug, got \"{other}\""
                )))
            }
        },
        Err(std::env::VarError::NotPresent) => log::LevelFilter::Error,
        Err(e) => return Err(CliError::Config(format!("RECAT_LOG: {e}"))),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    init_logging()?;
    let common = cli.cmd.common();
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let mut cfg = match &common.config {
        Some(path) => config::load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
        cfg.data_seed = seed;
    }
    if !matches!(cli.cmd, Cmd::Complexity(_)) {
        fs::create_dir_all(&common.out)
            .map_err(|e| CliError::Io(format!("{}: {e}", common.out.display())))?;
    }
    match &cli.cmd {
        Cmd::GenData(c) => commands::gen_data(&cfg, &c.out),
        Cmd::Train(c) => commands::train(&cfg, &c.out),
        Cmd::Sample(c) => commands::sample(&cfg, &c.out),
        Cmd::Eval(c) => commands::eval(&cfg, &c.out),
        Cmd::Sweep(c) => commands::sweep(&cfg, &c.out),
        Cmd::Complexity(_) => commands::complexity(&cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("recat: {e}");
            ExitCode::FAILURE
        }
    }
}
