//! `inflab <command> --config PATH [--out DIR] [--seed N]`
//!
//! Every command reads one configuration file, writes its results (CSV and
//! text) plus a `<command>.manifest` to the output directory, and on failure
//! prints a single `error command=... kind=... message="..."` line to stderr.

mod commands;
mod config;
mod fail;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::commands::Ctx;
use crate::config::Config;
use crate::fail::Failure;
use crate::output::OutDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Build datasets from raw CPI, exchange-rate, activity, policy-rate and target files
    Ingest,
    /// Output gap from the activity index
    Gap,
    /// Unit-root tests on the ingested datasets
    Adf,
    /// Simulate the structural model
    Simulate,
    /// Impulse responses to demand and supply shocks
    Irf,
    /// GMM estimation on one or more datasets
    Estimate,
    /// Synthetic dataset from known parameters
    Synth,
    /// Repeated synth + estimate with coverage and J-test size
    Montecarlo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Gap => "gap",
            Command::Adf => "adf",
            Command::Simulate => "simulate",
            Command::Irf => "irf",
            Command::Estimate => "estimate",
            Command::Synth => "synth",
            Command::Montecarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "inflab",
    version,
    about = "Inflation-targeting model: data preparation, simulation and GMM estimation",
    after_long_help = config::keys_help() + "\nEnvironment:\n    INFLAB_THREADS   cap on montecarlo worker threads\n    RUST_LOG         log filter (default warn)\n"
)]
struct Cli {
    command: Command,
    /// Configuration file
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (default: [output] dir of the config)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for synth, simulate and montecarlo
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = Config::load(&cli.config)?;
    let out_dir = match &cli.out {
        Some(d) => d.clone(),
        None => cfg.path_of(cfg.raw("output", "dir").unwrap_or("out")),
    };
    let mut ctx = Ctx {
        out: OutDir::create(&out_dir)?,
        cfg,
        seed: cli.seed,
    };
    let seed = match cli.command {
        Command::Ingest => commands::ingest(&mut ctx).map(|_| None),
        Command::Gap => commands::gap(&mut ctx).map(|_| None),
        Command::Adf => commands::adf(&mut ctx).map(|_| None),
        Command::Simulate => commands::simulate(&mut ctx).map(Some),
        Command::Irf => commands::irf(&mut ctx).map(|_| None),
        Command::Estimate => commands::estimate(&mut ctx).map(|_| None),
        Command::Synth => commands::synth(&mut ctx).map(Some),
        Command::Montecarlo => commands::montecarlo(&mut ctx).map(Some),
    }?;
    let Ctx { out, cfg, .. } = ctx;
    out.finish(cli.command.name(), &cfg, seed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.render(cli.command.name()));
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
