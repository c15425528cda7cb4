//! Score models, the mini-batch trainer, synthetic tasks and system evaluation.

mod data;
mod evaluate;
mod model;
mod optim;
mod task;
mod trainer;

pub use data::{Dataset, Sample};
pub use evaluate::{classifier_accuracy, evaluate_system, SystemEvaluation};
pub use model::{Activations, Architecture, ScoreModel};
pub use optim::{Optimizer, OptimizerKind};
pub use task::{draw, generate_task, Component, ExpertProfile, SyntheticTaskSpec, Task};
pub use trainer::{mean_surrogate_loss, surrogate_losses, train, TrainConfig, TrainOutcome};

pub(crate) use trainer::accumulate_gradient;
