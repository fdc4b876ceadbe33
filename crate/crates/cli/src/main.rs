use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use whet_core::config::{load_config, parse_override, Experiment, Override};
use whet_core::experiment::run_experiment;

#[derive(Parser)]
#[command(name = "whet", version, about = "Wireless power transfer to a passing sensor: policy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file (`key = value` lines under [section] headers).
    #[arg(long)]
    config: PathBuf,
    /// fig3a, fig3b, fig4, fig5a, fig5b or single.
    #[arg(long)]
    experiment: Option<Experiment>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed for the Monte Carlo trials.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Time-grid points (must be 1 mod 4).
    #[arg(long)]
    grid: Option<usize>,
    /// Extra `key=value` or `section.key=value` assignments, applied last.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn overrides(args: &RunArgs) -> Result<Vec<Override>> {
    let mut list = Vec::new();
    let mut push = |text: String| -> Result<()> {
        list.push(parse_override(&text).with_context(|| format!("bad override `{text}`"))?);
        Ok(())
    };
    if let Some(e) = args.experiment {
        push(format!("experiment={e}"))?;
    }
    if let Some(out) = &args.out {
        push(format!("out={}", out.display()))?;
    }
    if let Some(seed) = args.seed {
        push(format!("base_seed={seed}"))?;
    }
    if let Some(trials) = args.trials {
        push(format!("trials={trials}"))?;
    }
    if let Some(grid) = args.grid {
        push(format!("grid={grid}"))?;
    }
    for o in &args.overrides {
        push(o.clone())?;
    }
    Ok(list)
}

fn run(args: RunArgs) -> Result<()> {
    let overrides = overrides(&args)?;
    let cfg = load_config(&args.config, &overrides).with_context(|| format!("config {}", args.config.display()))?;
    let report = run_experiment(&cfg)?;
    println!("{}", report.summary);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WHET_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
