use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use scalespin::{load_config, run_experiment, ExperimentConfig, Suite};

/// Picard iteration in scales of weighted Hilbert spaces, checked against its
/// explicit bounds.
#[derive(Parser)]
#[command(name = "scalespin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configuration, neighbors, regularity and GL_q fits.
    Sample(RunArgs),
    /// Euler-Maruyama ensemble, moments, continuity exponent, locality.
    Simulate(RunArgs),
    /// Picard iteration, contraction, fixed point, uniqueness, growth.
    Picard(RunArgs),
    /// Closed-form constants, bound and series tables.
    Estimates(RunArgs),
    /// Norm-singularity sweeps for the integral operator and the matrix.
    OperatorFit(RunArgs),
    /// Every suite in order.
    Full(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; omitted blocks take reference values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides configuration.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides run.workers).
    #[arg(long)]
    workers: Option<usize>,
}

fn run(suite: Suite, args: RunArgs) -> anyhow::Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::reference(),
    };
    cfg.run.suite = suite;
    if let Some(out) = args.out {
        cfg.run.output_dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = args.seed {
        cfg.configuration.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.run.workers = Some(w);
    }
    let artifact = run_experiment(&cfg)?;
    for c in artifact.checks() {
        println!(
            "{} {:<10} {:<28} measured={:<12.6e} bound={:<12.6e} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.measured,
            c.bound,
            c.detail
        );
    }
    for e in &artifact.manifest.errors {
        eprintln!("error: {e}");
    }
    println!(
        "{} checks, {} failed; artifacts in {}",
        artifact.checks().len(),
        artifact.checks().iter().filter(|c| !c.passed).count(),
        artifact.out_dir.display()
    );
    Ok(artifact.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, args) = match cli.command {
        Command::Sample(a) => (Suite::Sample, a),
        Command::Simulate(a) => (Suite::Simulate, a),
        Command::Picard(a) => (Suite::Picard, a),
        Command::Estimates(a) => (Suite::Estimates, a),
        Command::OperatorFit(a) => (Suite::OperatorFit, a),
        Command::Full(a) => (Suite::Full, a),
    };
    match run(suite, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
