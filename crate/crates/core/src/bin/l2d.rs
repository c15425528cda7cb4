//! `l2d`: command-line runner for learning-to-defer experiments.
//!
//! Exit codes: 0 when every check holds, 1 on configuration or runtime
//! errors, 2 when a verified inequality fails.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use l2d_core::experiment::{
    run_gaps, run_learning_bound, run_regret_check, run_train, run_verify, ExperimentConfig, Outcome,
    Report,
};
use l2d_core::Result;

#[derive(Parser, Debug)]
#[command(name = "l2d", version, about = "Learning to defer with multiple experts")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train deferral systems and write models, loss curves and evaluations.
    Train,
    /// Check the consistency bound on random instances.
    Verify,
    /// Tabulate the binary exponential gap.
    Gaps {
        /// Comma-separated score bounds.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        /// Comma-separated conditional probabilities.
        #[arg(long, value_delimiter = ',')]
        eta: Option<Vec<f64>>,
    },
    /// Check the finite-sample deferral bound.
    LearningBound,
    /// Cross-check the regret formulas against direct computation.
    RegretCheck {
        /// Number of random instances.
        #[arg(long)]
        instances: Option<u64>,
    },
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    match &cli.command {
        Command::Gaps { lambda, eta } => {
            if let Some(l) = lambda {
                cfg.gaps.lambdas = l.clone();
            }
            if let Some(e) = eta {
                cfg.gaps.etas = e.clone();
            }
        }
        Command::RegretCheck { instances: Some(n) } => cfg.regret_check.instances = *n,
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Report> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| l2d_core::Error::Config(format!("jobs: {e}")))?;
    }
    let cfg = load(cli)?;
    match cli.command {
        Command::Train => run_train(&cfg),
        Command::Verify => run_verify(&cfg),
        Command::Gaps { .. } => run_gaps(&cfg),
        Command::LearningBound => run_learning_bound(&cfg),
        Command::RegretCheck { .. } => run_regret_check(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| writeln!(buf, "{} {}", record.level(), record.args()))
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            if report.outcome == Outcome::Violation {
                log::warn!("event=check_failed");
            }
            ExitCode::from(report.outcome.exit_code())
        }
        Err(e) => {
            log::error!("event=error message=\"{e}\"");
            ExitCode::from(1)
        }
    }
}
