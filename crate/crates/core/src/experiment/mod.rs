//! Experiment runner behind the `l2d` binary.
//!
//! Each command reads an [`ExperimentConfig`], writes `effective_config.json`
//! and its CSV artifacts into the output directory, and reports whether every
//! checked inequality held. Rows are computed in a rayon pool and written in
//! a fixed order, so artifacts are byte-identical across runs and pool sizes.

mod commands;
mod config;
mod report;

pub use commands::{run_gaps, run_learning_bound, run_regret_check, run_train, run_verify};
pub use config::{
    AnalysisConfig, ExperimentConfig, GapsConfig, LearningBoundConfig, ModelConfig,
    RegretCheckConfig, RunsConfig,
};
pub use report::format_real;

/// Outcome of a command plus the one-line summaries it produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub outcome: Outcome,
    /// `key=value` summary lines, one per run or per sweep.
    pub summary: Vec<String>,
}

impl Report {
    fn new(outcome: Outcome, summary: Vec<String>) -> Self {
        Self { outcome, summary }
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Every checked inequality held.
    Success,
    /// At least one checked inequality failed.
    Violation,
}

impl Outcome {
    /// Process exit code: 0 on success, 2 on a failed inequality.
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Violation => 2,
        }
    }

    fn from_all(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::Violation
        }
    }
}
