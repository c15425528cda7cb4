use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::Activations;
use super::optim::{Optimizer, OptimizerKind};
use super::{Dataset, ScoreModel};
use crate::error::{Error, Result};
use crate::losses::{surrogate_eval, ConstraintScope, SurrogateSpec};
use crate::seeding::rng_for;

/// Hyperparameters of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub spec: SurrogateSpec,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default)]
    pub seed: u64,
    /// Must be set exactly when the spec is a constrained loss.
    #[serde(default)]
    pub constraint_projection: bool,
    #[serde(default)]
    pub constraint_scope: ConstraintScope,
    /// Keeps the parameters inside a Euclidean ball of this radius.
    #[serde(default)]
    pub max_param_norm: Option<f64>,
}

fn default_batch() -> usize {
    32
}

fn default_weight_decay() -> f64 {
    1e-4
}

impl TrainConfig {
    /// Defaults for a spec: Adam, batch 32, weight decay 1e-4, projection iff constrained.
    pub fn for_spec(spec: SurrogateSpec, epochs: usize, learning_rate: f64, seed: u64) -> Self {
        Self {
            spec,
            epochs,
            batch_size: default_batch(),
            learning_rate,
            optimizer: OptimizerKind::default(),
            weight_decay: default_weight_decay(),
            seed,
            constraint_projection: spec.is_constrained(),
            constraint_scope: ConstraintScope::Augmented,
            max_param_norm: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraint_projection != self.spec.is_constrained() {
            return Err(Error::Config(format!(
                "train.constraint_projection must be {} for {}",
                self.spec.is_constrained(),
                self.spec
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".to_string()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("train.learning_rate must be >= 0".to_string()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("train.weight_decay must be >= 0".to_string()));
        }
        if let Some(r) = self.max_param_norm {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config("train.max_param_norm must be >= 0".to_string()));
            }
        }
        Ok(())
    }
}

/// Trained model and the mean training surrogate loss before training and after each epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: ScoreModel,
    pub loss_curve: Vec<f64>,
}

/// Mean surrogate loss of a model over a dataset.
pub fn mean_surrogate_loss(model: &ScoreModel, data: &Dataset, spec: &SurrogateSpec) -> f64 {
    surrogate_losses(model, data, spec).iter().sum::<f64>() / data.len() as f64
}

/// Surrogate loss of a model on every example of a dataset.
pub fn surrogate_losses(model: &ScoreModel, data: &Dataset, spec: &SurrogateSpec) -> Vec<f64> {
    let classes = data.space.classes();
    let mut cache = Activations::default();
    let mut scores = vec![0.0; model.output_dim];
    data.samples
        .iter()
        .map(|s| {
            model.forward_into(&s.features, &mut cache, &mut scores);
            surrogate_eval(spec, classes, &scores, s.label, &s.costs, None)
        })
        .collect()
}

/// Adds the gradient of `sum_i weight_i * L(h, x_i, y_i)` over `indices` into `grad` and
/// returns the weighted loss sum.
pub(crate) fn accumulate_gradient(
    model: &ScoreModel,
    data: &Dataset,
    spec: &SurrogateSpec,
    indices: &[usize],
    weights: Option<&[f64]>,
    grad: &mut [f64],
) -> f64 {
    let classes = data.space.classes();
    let mut cache = Activations::default();
    let mut scores = vec![0.0; model.output_dim];
    let mut score_grad = vec![0.0; model.output_dim];
    let mut total = 0.0;
    for &i in indices {
        let s = &data.samples[i];
        let w = weights.map_or(1.0, |w| w[i]);
        model.forward_into(&s.features, &mut cache, &mut scores);
        score_grad.iter_mut().for_each(|g| *g = 0.0);
        total += w * surrogate_eval(spec, classes, &scores, s.label, &s.costs, Some(&mut score_grad));
        if w != 1.0 {
            score_grad.iter_mut().for_each(|g| *g *= w);
        }
        model.backward(&s.features, &cache, &score_grad, grad);
    }
    total
}

/// Mini-batch minimization of the empirical surrogate loss.
///
/// Raw costs above 1 make the expert weights `1 - c` negative; with a loss
/// that is unbounded above this leaves the objective unbounded below, so such
/// data is rejected unless the spec's base loss is bounded.
pub fn train(model: ScoreModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.check_nonempty()?;
    if model.output_dim != data.space.size() || model.input_dim != data.input_dim() {
        return Err(Error::Config(format!(
            "model maps {} -> {}, data needs {} -> {}",
            model.input_dim,
            model.output_dim,
            data.input_dim(),
            data.space.size()
        )));
    }
    if data.max_cost() > 1.0 && !cfg.spec.is_bounded() {
        return Err(Error::Config(format!(
            "costs reach {} > 1, which makes {} unbounded below; normalize the expert costs",
            data.max_cost(),
            cfg.spec
        )));
    }
    let mut model = model;
    let classes = data.space.classes();
    if cfg.constraint_projection {
        model.project_outputs(cfg.constraint_scope, classes);
    }
    if let Some(r) = cfg.max_param_norm {
        model.clip_norm(r);
    }
    let mut optimizer = Optimizer::new(cfg.optimizer, model.weights.len());
    let mut rng = rng_for(cfg.seed, "shuffle", 0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; model.weights.len()];
    let mut curve = vec![mean_surrogate_loss(&model, data, &cfg.spec)];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = accumulate_gradient(&model, data, &cfg.spec, chunk, None, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch,
                    param_norm: model.norm(),
                });
            }
            let scale = 1.0 / chunk.len() as f64;
            for (g, w) in grad.iter_mut().zip(&model.weights) {
                *g = *g * scale + cfg.weight_decay * w;
            }
            optimizer.step(&mut model.weights, &grad, cfg.learning_rate);
            if cfg.constraint_projection {
                model.project_outputs(cfg.constraint_scope, classes);
            }
            if let Some(r) = cfg.max_param_norm {
                model.clip_norm(r);
            }
        }
        let loss = mean_surrogate_loss(&model, data, &cfg.spec);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: order.len().div_ceil(cfg.batch_size),
                param_norm: model.norm(),
            });
        }
        curve.push(loss);
    }
    Ok(TrainOutcome {
        model,
        loss_curve: curve,
    })
}
