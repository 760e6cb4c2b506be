#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use stages::{Ctx, StageOutcome};
use stochlyap::Result;

/// Certify, construct and verify stochastic Lyapunov functions from a JSON experiment config.
#[derive(Debug, Parser)]
#[command(name = "stochlyap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Sample trajectories under the configured feedback.
    Simulate,
    /// Fit per-trajectory bounds and extract a uniform envelope.
    Certify,
    /// Build the probabilistic Lyapunov function from the certificate.
    ConstructLf,
    /// Check one-step decay of the probabilistic and mean Lyapunov functions.
    VerifyDecay,
    /// Synthesize the steepest-descent policy.
    Synthesize,
    /// Check reaching times of the synthesized policy.
    VerifyReaching,
    /// Run every stage in order.
    Pipeline,
}

type Stage = fn(&Ctx) -> Result<StageOutcome>;

const PIPELINE: [Stage; 6] = [
    stages::simulate,
    stages::certify,
    stages::construct_lf,
    stages::verify_decay,
    stages::synthesize,
    stages::verify_reaching_stage,
];

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("STOCHLYAP_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| stochlyap::Error::Config(format!("STOCHLYAP_THREADS: expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| stochlyap::Error::Config(format!("STOCHLYAP_THREADS: {e}")))
}

fn run(cli: &Cli) -> Result<bool> {
    init_threads()?;
    let path = cli.config.as_ref().ok_or_else(|| stochlyap::Error::Config("--config is required".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    stages::ensure_out(&cli.out)?;
    let ctx = Ctx { cfg, seed, out: cli.out.clone() };
    let todo: Vec<Stage> = match cli.command {
        Command::Simulate => vec![stages::simulate],
        Command::Certify => vec![stages::certify],
        Command::ConstructLf => vec![stages::construct_lf],
        Command::VerifyDecay => vec![stages::verify_decay],
        Command::Synthesize => vec![stages::synthesize],
        Command::VerifyReaching => vec![stages::verify_reaching_stage],
        Command::Pipeline => PIPELINE.to_vec(),
    };
    let mut all = true;
    for stage in todo {
        let o = stage(&ctx)?;
        all &= o.verdict.is_pass();
        if !cli.quiet {
            let v = if o.verdict.is_pass() { "PASS" } else { "FAIL" };
            println!("{:<16} {v}  {}", o.stage, o.detail);
        }
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
