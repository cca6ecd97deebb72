//! `ccl`: property suites, training runs, probing, bound curves and sweeps.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "ccl", version, about = "Contrastive continual learning lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: config `out`, then ./ccl-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the bound, identity, constant and gradient property suites.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Train a task sequence, writing trace, per-epoch CSV and checkpoints.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from a `state/taskN.json` written by an earlier run.
        #[arg(long, value_name = "PATH")]
        resume: Option<PathBuf>,
    },
    /// Linear-probe a checkpoint on the scenario's tasks.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        /// Fit the classifier on the checkpoint's last task only.
        #[arg(long)]
        last_task_only: bool,
    },
    /// Upper and lower bounds across a λ grid, plus the turning point.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// λ grid as lo:hi:n.
        #[arg(long, value_name = "SPEC")]
        grid: Option<String>,
        /// Trace JSON whose bound report supplies the losses and weights.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Independent runs over a grid of λ_0, κ, mode and seed.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Axis as key=v1,v2,… with key one of lambda0, kappa, mode, seed.
        #[arg(long, value_name = "KEY=VALUES", required = true)]
        vary: Vec<String>,
    },
}

/// Worker-pool size from `CCL_THREADS`, else the available cores.
fn threads() -> CliResult<usize> {
    match std::env::var("CCL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::config(format!("CCL_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn load(common: &Common, grid: Option<String>) -> CliResult<(ExperimentConfig, PathBuf)> {
    let cfg = ExperimentConfig::load(common.config.as_deref(), common.seed, grid)?;
    let out = cfg.out_dir(common.out.clone());
    Ok((cfg, out))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Verify { common } => {
            let (cfg, out) = load(&common, None)?;
            commands::verify::run(&cfg, &out)
        }
        Command::Train { common, resume } => {
            let (cfg, out) = load(&common, None)?;
            commands::train::run(&cfg, &out, resume)
        }
        Command::Probe {
            common,
            checkpoint,
            last_task_only,
        } => {
            let (cfg, out) = load(&common, None)?;
            commands::probe::run(&cfg, &out, &checkpoint, last_task_only)
        }
        Command::Bounds { common, grid, trace } => {
            let (cfg, out) = load(&common, grid)?;
            commands::bounds::run(&cfg, &out, trace)
        }
        Command::Sweep { common, vary } => {
            let threads = threads()?;
            let (cfg, out) = load(&common, None)?;
            commands::sweep::run(&cfg, &out, &vary, threads)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ccl: {e}");
            ExitCode::from(e.code())
        }
    }
}
