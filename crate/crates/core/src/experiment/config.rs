use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{HypothesisClassSpec, RademacherOptions};
use crate::error::{Error, Result};
use crate::losses::SurrogateSpec;
use crate::training::{Architecture, SyntheticTaskSpec, TrainConfig};

/// One experiment: task, training setup and analysis settings.
///
/// Every section has defaults except `task` and `train`, which only the
/// commands that generate data or train models require.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed; every random stream of the experiment is derived from it.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub task: Option<SyntheticTaskSpec>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub runs: RunsConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub gaps: GapsConfig,
    #[serde(default)]
    pub learning_bound: LearningBoundConfig,
    #[serde(default)]
    pub regret_check: RegretCheckConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("l2d-output")
}

/// Score-model architecture used by `train`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub hidden_dim: usize,
}

fn default_hidden() -> usize {
    32
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Mlp2,
            hidden_dim: default_hidden(),
        }
    }
}

/// Repetitions of the training pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunsConfig {
    /// Training-set size per run.
    pub train_size: usize,
    /// Independent runs, each with its own population, sample and initialization.
    pub count: usize,
    /// Also trains a classifier that never defers, with the same architecture.
    pub baseline: bool,
    /// Rescales costs into `[0, 1]` before training and evaluation.
    pub normalize_costs: bool,
}

impl Default for RunsConfig {
    fn default() -> Self {
        Self {
            train_size: 1000,
            count: 1,
            baseline: true,
            normalize_costs: true,
        }
    }
}

/// Settings of the bound-verification sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub class: HypothesisClassSpec,
    pub verify_specs: Vec<SurrogateSpec>,
    pub sweep_seeds: u64,
    pub max_points: usize,
    pub max_classes: usize,
    pub max_experts: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            class: HypothesisClassSpec::AllMeasurable,
            verify_specs: SurrogateSpec::all(),
            sweep_seeds: 1000,
            max_points: 6,
            max_classes: 4,
            max_experts: 3,
        }
    }
}

/// Grid of the binary exponential gap table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapsConfig {
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
}

impl Default for GapsConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.5, 1.0, 2.0, 4.0],
            etas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

/// Settings of the finite-sample bound check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningBoundConfig {
    pub sample_sizes: Vec<usize>,
    pub seeds: u64,
    pub specs: Vec<SurrogateSpec>,
    pub delta: f64,
    /// Radius of the parameter ball defining the hypothesis class.
    pub radius: f64,
    pub architecture: Architecture,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub rademacher_trials: usize,
    pub rademacher: RademacherOptions,
    /// Upper bound of the surrogate loss; when absent, 1.1 times the largest
    /// training loss of the empirical minimizer.
    pub b_l: Option<f64>,
    /// Surrogate minimizability gap of the class; 0 unless supplied.
    pub minimizability_gap: f64,
}

impl Default for LearningBoundConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![250, 1000, 4000],
            seeds: 3,
            specs: vec![SurrogateSpec::CompSumLog, SurrogateSpec::CompSumMae],
            delta: 0.05,
            radius: 5.0,
            architecture: Architecture::Linear,
            hidden_dim: 0,
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
            rademacher_trials: 10,
            rademacher: RademacherOptions::default(),
            b_l: None,
            minimizability_gap: 0.0,
        }
    }
}

/// Size of the standalone oracle-equivalence check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegretCheckConfig {
    pub instances: u64,
    pub tolerance: f64,
}

impl Default for RegretCheckConfig {
    fn default() -> Self {
        Self {
            instances: 500,
            tolerance: 1e-12,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            output_dir: default_output_dir(),
            task: None,
            train: None,
            model: ModelConfig::default(),
            runs: RunsConfig::default(),
            analysis: AnalysisConfig::default(),
            gaps: GapsConfig::default(),
            learning_bound: LearningBoundConfig::default(),
            regret_check: RegretCheckConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses a JSON document; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    /// Reads and parses a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Document with every default filled in.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The root seed, which must be set in the file or on the command line.
    pub fn root_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("seed: missing root seed".to_string()))
    }

    /// The task section, required by commands that generate data.
    pub fn task(&self) -> Result<&SyntheticTaskSpec> {
        let task = self
            .task
            .as_ref()
            .ok_or_else(|| Error::Config("task: section is required".to_string()))?;
        task.validate()?;
        Ok(task)
    }

    /// The training section, required by `train`.
    pub fn train(&self) -> Result<&TrainConfig> {
        let train = self
            .train
            .as_ref()
            .ok_or_else(|| Error::Config("train: section is required".to_string()))?;
        train.validate()?;
        Ok(train)
    }

    /// Checks the sections that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if let HypothesisClassSpec::BoundedScores { lambda } = self.analysis.class {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Config(format!(
                    "analysis.class.lambda = {lambda} must be positive"
                )));
            }
        }
        let a = &self.analysis;
        if a.max_points == 0 || a.max_classes < 2 || a.max_experts == 0 {
            return Err(Error::Config(
                "analysis: need max_points >= 1, max_classes >= 2, max_experts >= 1".to_string(),
            ));
        }
        if let Some(l) = self.gaps.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::Config(format!("gaps.lambdas: {l} must be positive")));
        }
        if let Some(e) = self.gaps.etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Config(format!("gaps.etas: {e} must lie in [0, 1]")));
        }
        let lb = &self.learning_bound;
        if !(lb.delta > 0.0 && lb.delta < 1.0) {
            return Err(Error::Config(format!(
                "learning_bound.delta = {} must lie in (0, 1)",
                lb.delta
            )));
        }
        if lb.sample_sizes.contains(&0) {
            return Err(Error::Config("learning_bound.sample_sizes must be positive".to_string()));
        }
        if !(lb.radius >= 0.0 && lb.radius.is_finite()) {
            return Err(Error::Config("learning_bound.radius must be >= 0".to_string()));
        }
        if lb.rademacher_trials == 0 {
            return Err(Error::Config("learning_bound.rademacher_trials must be positive".to_string()));
        }
        if lb.batch_size == 0 {
            return Err(Error::Config("learning_bound.batch_size must be positive".to_string()));
        }
        if let Some(b) = lb.b_l {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config("learning_bound.b_l must be positive".to_string()));
            }
        }
        if !(lb.minimizability_gap >= 0.0 && lb.minimizability_gap.is_finite()) {
            return Err(Error::Config("learning_bound.minimizability_gap must be >= 0".to_string()));
        }
        if self.runs.train_size == 0 {
            return Err(Error::Config("runs.train_size must be positive".to_string()));
        }
        Ok(())
    }
}
