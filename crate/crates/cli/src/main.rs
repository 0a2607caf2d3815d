//! `uavtl` command line: radio maps, training, transfer plans, comparisons,
//! greedy evaluation and curve export.
//!
//! On success the command's JSON summary goes to stdout. On failure a single
//! JSON line `{"status":"error","kind":...,"message":...}` goes to stderr and
//! the exit code is 1, or 2 for malformed arguments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uavtl::agent::Algo;
use uavtl::cityworld::{EnvId, Profile};
use uavtl::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use uavtl::par::Execution;

#[derive(Debug, Parser)]
#[command(name = "uavtl", version, about = "UAV trajectory learning with continuous transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a radio map and print its outage summary.
    Map(Common),
    /// Train one agent per seed from scratch.
    Train(Common),
    /// Run a transfer plan (default: env1 -> env2 -> env3) per seed.
    Transfer(Common),
    /// Paired scratch-versus-transfer comparison (default plan: env1 -> env2).
    Compare(Common),
    /// Greedy rollouts of a checkpoint from random start cells.
    Eval(Common),
    /// Smoothed learning curves for run directories.
    Curves(CurvesArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    Dqn,
    Ddqn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

#[derive(Debug, Args)]
struct Common {
    /// Environment TOML (map, train, eval) or plan TOML (transfer, compare).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in environment when no config is given.
    #[arg(long, default_value = "env1", value_parser = parse_env)]
    env: EnvId,
    /// Comma-separated seeds.
    #[arg(long, default_value = "0", value_parser = parse_seeds)]
    seeds: SeedList,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "ddqn")]
    algo: AlgoArg,
    #[arg(long, value_enum, default_value = "desk")]
    profile: ProfileArg,
    /// Run jobs one after another instead of in parallel.
    #[arg(long)]
    deterministic: bool,
    /// Weights file to evaluate.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Number of random evaluation starts.
    #[arg(long, default_value_t = 100)]
    starts: usize,
    /// Moving-average window for exported curves.
    #[arg(long, default_value_t = 50)]
    window: usize,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    /// Run directories; defaults to every run found under --out.
    runs: Vec<PathBuf>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    window: usize,
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    s.split(',').map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad seed {p:?}: {e}"))).collect::<Result<Vec<_>, _>>().map(SeedList)
}

fn parse_env(s: &str) -> Result<EnvId, String> {
    s.parse()
}

fn experiment(kind: ExperimentKind, c: Common) -> ExperimentConfig {
    ExperimentConfig {
        profile: match c.profile {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Desk => Profile::Desk,
        },
        config: c.config,
        preset: c.env,
        checkpoint: c.checkpoint,
        algo: match c.algo {
            AlgoArg::Dqn => Algo::Dqn,
            AlgoArg::Ddqn => Algo::Ddqn,
        },
        seeds: c.seeds.0,
        smoothing_window: c.window,
        eval_starts: c.starts,
        execution: if c.deterministic { Execution::Sequential } else { Execution::Parallel },
        ..ExperimentConfig::new(kind, c.out)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", serde_json::json!({ "status": "error", "kind": "usage", "message": message }));
            return ExitCode::from(2);
        }
    };
    let cfg = match cli.command {
        Command::Map(c) => experiment(ExperimentKind::Map, c),
        Command::Train(c) => experiment(ExperimentKind::Train, c),
        Command::Transfer(c) => experiment(ExperimentKind::Transfer, c),
        Command::Compare(c) => experiment(ExperimentKind::Compare, c),
        Command::Eval(c) => experiment(ExperimentKind::Eval, c),
        Command::Curves(c) => ExperimentConfig { runs: c.runs, smoothing_window: c.window, ..ExperimentConfig::new(ExperimentKind::Curves, c.out) },
    };
    match run_experiment(&cfg) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serialises"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "status": "error", "kind": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
