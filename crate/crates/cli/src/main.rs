//! `rcquad`: batch driver for random-cluster experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 verification failure, 4 unreliable statistics.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Outcome};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "rcquad", version, about = "Random-cluster model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "RCQUAD_THREADS")]
    threads: Option<usize>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exact identities over the enumeration corpus.
    ExactCheck,
    /// Event probabilities on a region or a truncated strip.
    Estimate,
    /// SVG picture of a configuration.
    Snapshot,
    /// Phase verdict at one parameter point.
    Classify,
    /// Bisection for the critical point.
    PcScan,
    /// Strip densities and the inequalities between them.
    Densities,
    /// Crossing probabilities of rectangles at fixed aspect ratio.
    BoxCrossing,
    /// One-arm probabilities and their decay.
    OneArm,
    /// Crossing rates under the pushing boundary conditions.
    PushingProbe,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<std::io::Error>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<rcquad::Error>() {
            return match e {
                rcquad::Error::OrderingViolated { .. }
                | rcquad::Error::ZeroProbability
                | rcquad::Error::Mismatch(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            anyhow::bail!("--threads must be positive");
        }
        // Results do not depend on the pool size; only its first setup counts.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("rcquad-out"));
    let ctx = Ctx { cfg: &cfg, seed, out: &out };
    match cli.command {
        Command::ExactCheck => commands::exact_check(&ctx),
        Command::Estimate => commands::estimate(&ctx),
        Command::Snapshot => commands::snapshot(&ctx),
        Command::Classify => commands::classify_cmd(&ctx),
        Command::PcScan => commands::pc_scan_cmd(&ctx),
        Command::Densities => commands::densities(&ctx),
        Command::BoxCrossing => commands::box_crossing(&ctx),
        Command::OneArm => commands::one_arm(&ctx),
        Command::PushingProbe => commands::pushing(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
