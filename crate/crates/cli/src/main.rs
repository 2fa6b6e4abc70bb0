use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use wib_cli::{parse_config_for, runner, verify, Mode, RunConfig};

/// Weighted Thompson Sampling experiments.
#[derive(Parser)]
#[command(name = "wib", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regret traces for each configured policy on a bandit instance.
    Simulate(RunArgs),
    /// Peak-gain estimation on an FIR system.
    Gain(RunArgs),
    /// Statistical property suite; exits nonzero on any failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Overrides {
    /// Base seed for every replication stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV path; the JSON sidecar is written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn load(path: Option<&PathBuf>, mode: Mode, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = match path {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config_for(&text, mode).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::new(mode),
    };
    if let Some(seed) = overrides.seed {
        config.base_seed = seed;
    }
    if let Some(workers) = overrides.workers {
        config.workers = workers;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate(args, Mode::Simulate),
        Command::Gain(args) => simulate(args, Mode::Gain),
        Command::Verify(args) => {
            let config = load(args.config.as_ref(), Mode::Verify, &args.overrides)?;
            let report = verify::run_suite(&config, |c| println!("{c}"));
            let failed = report.failures().count();
            println!(
                "{} checks, {failed} failed, {:.1} s",
                report.checks.len(),
                report.elapsed_s
            );
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn simulate(args: RunArgs, mode: Mode) -> Result<ExitCode> {
    let mut config = load(Some(&args.config), mode, &args.overrides)?;
    if let Some(out) = args.out {
        config.out = out;
    }
    let output = runner::run(&config)?;
    println!("{output}");
    println!(
        "wrote {} and {}",
        config.out.display(),
        runner::sidecar_path(&config.out).display()
    );
    Ok(ExitCode::SUCCESS)
}
