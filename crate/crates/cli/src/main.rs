use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mtopt_cli::{cmd_analyze, cmd_optimize, cmd_plan, load_config, Outcome, RunOptions};

/// Topology optimization under machining accessibility constraints.
///
/// Exit status is 0 on success, 1 on error and 2 when a command completes
/// but its result fails the accessibility tolerance. Set `MT_LOG` (for
/// example `MT_LOG=debug`) to control log output.
#[derive(Debug, Parser)]
#[command(name = "mt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Directory for output files.
    #[arg(long, global = true, default_value = "mt-out")]
    out_dir: PathBuf,
    /// Number of worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Memory budget for concurrent convolutions, in MiB.
    #[arg(long, global = true)]
    mem_budget_mb: Option<usize>,
    /// Also write intermediate fields under `<out-dir>/intermediate`.
    #[arg(long, global = true)]
    dump_intermediate: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a design's accessibility.
    Analyze { config: PathBuf, design: PathBuf },
    /// Run the constrained optimizer.
    Optimize { config: PathBuf },
    /// Build a greedy machining plan for a design.
    Plan {
        config: PathBuf,
        design: PathBuf,
        /// Write the stock after every step.
        #[arg(long)]
        snapshots: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut opts = RunOptions {
        out_dir: cli.common.out_dir,
        mem_budget_mb: cli.common.mem_budget_mb,
        dump_intermediate: cli.common.dump_intermediate,
        snapshots: false,
    };
    match cli.command {
        Command::Analyze { config, design } => cmd_analyze(&load_config(config)?, &design, &opts),
        Command::Optimize { config } => cmd_optimize(&load_config(config)?, &opts),
        Command::Plan {
            config,
            design,
            snapshots,
        } => {
            opts.snapshots = snapshots;
            cmd_plan(&load_config(config)?, &design, &opts)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MT_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
