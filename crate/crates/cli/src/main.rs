//! `klucb`: regret simulations, finite-time bounds and Monte-Carlo checks for
//! KL-UCB policies, written as CSV.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use klucb::analysis::{coverage_check, deviation_check, scenario_lower_bound};
use klucb::config::ScenarioConfig;
use klucb::report::{bound_rows, bounds_csv, check_csv, run_csv};
use klucb::simulator::run_monte_carlo_with;
use klucb::{ArmModel, Divergence, Execution};

#[derive(Debug, Parser)]
#[command(name = "klucb", version, about = "KL-UCB bandit simulator and bound evaluator")]
struct Cli {
    /// Worker threads for Monte-Carlo loops (default: all cores).
    #[arg(long, env = "KLUCB_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate every policy of a scenario and write the regret table.
    Run(ScenarioArgs),
    /// Evaluate the finite-time pull bounds of a scenario.
    Bounds(ScenarioArgs),
    /// Monte-Carlo check of a concentration inequality.
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,

    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Use the scenario's `paper_replications` count.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Debug, Subcommand)]
enum CheckKind {
    /// Deviation of the empirical mean below `mu_star` over `t` rounds.
    Deviation {
        /// Divergence family, e.g. `bernoulli`, `poisson`, `gamma:2`.
        #[arg(long)]
        family: Divergence,
        #[arg(long)]
        mu_star: f64,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coverage of the empirical-likelihood upper bound after `n` draws.
    Coverage {
        /// Arm on [0, 1], e.g. `"bernoulli 0.5"` or `"finite 0:0.3,1:0.7"`.
        #[arg(long)]
        arm: ArmModel,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit code 2 for unusable input, 3 for everything that fails afterwards.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn load(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::load(&args.config)
        .with_context(|| format!("invalid scenario {}", args.config.display()))
        .map_err(config_err)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(runtime_err),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: &ScenarioArgs) -> Result<(), Failure> {
    let config = load(args)?;
    let scenario = config.scenario(args.paper_scale).map_err(config_err)?;
    let mut summaries = Vec::with_capacity(config.policies.len());
    for policy in &config.policies {
        let start = Instant::now();
        let summary = run_monte_carlo_with(policy, &scenario, Execution::default())
            .with_context(|| format!("simulating {policy}"))
            .map_err(runtime_err)?;
        eprintln!(
            "{}: {} replications, final mean regret {:.3} ({:.1}s)",
            summary.label,
            summary.replications,
            summary.final_mean(),
            start.elapsed().as_secs_f64()
        );
        summaries.push(summary);
    }
    let lower = match scenario_lower_bound(&scenario.arms, scenario.rescale_bound) {
        Ok(line) => Some(line),
        Err(e) => {
            eprintln!("no lower bound for this scenario: {e}");
            None
        }
    };
    emit(args.out.as_deref(), &run_csv(&summaries, lower.as_ref()))
}

fn bounds(args: &ScenarioArgs) -> Result<(), Failure> {
    let config = load(args)?;
    let scenario = config.scenario(args.paper_scale).map_err(config_err)?;
    let rows = bound_rows(&scenario, &config.policies).map_err(runtime_err)?;
    emit(args.out.as_deref(), &bounds_csv(&rows))
}

fn check(kind: &CheckKind) -> Result<(), Failure> {
    let exec = Execution::default();
    let (report, out) = match kind {
        CheckKind::Deviation { family, mu_star, t, epsilon, samples, seed, out } => {
            (deviation_check(family, *mu_star, *t, *epsilon, *samples, *seed, exec), out)
        }
        CheckKind::Coverage { arm, n, epsilon, samples, seed, out } => {
            (coverage_check(arm, *n, *epsilon, *samples, *seed, exec), out)
        }
    };
    // the inputs are only validated by the verifiers themselves
    let report = report.map_err(config_err)?;
    if report.vacuous() {
        eprintln!("bound {} is at least 1 and says nothing", report.bound);
    }
    emit(out.as_deref(), &check_csv(&report))
}

#[cfg(feature = "parallel")]
fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")
            .map_err(runtime_err)?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if threads.is_some_and(|n| n > 1) {
        eprintln!("built without the parallel feature; running on one thread");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = set_threads(cli.threads).and_then(|()| match &cli.command {
        Command::Run(args) => run(args),
        Command::Bounds(args) => bounds(args),
        Command::Check { kind } => check(kind),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
