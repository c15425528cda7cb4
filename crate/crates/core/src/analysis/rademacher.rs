use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{ConstraintScope, SurrogateSpec};
use crate::seeding::rng_for;
use crate::training::{accumulate_gradient, Architecture, Dataset, Optimizer, OptimizerKind, ScoreModel};

/// Score models whose parameter vector lies in a Euclidean ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterBall {
    pub architecture: Architecture,
    #[serde(default)]
    pub hidden_dim: usize,
    pub radius: f64,
}

/// Settings of the sign-weighted gradient ascent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherOptions {
    pub restarts: usize,
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for RademacherOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            steps: 100,
            learning_rate: 0.05,
        }
    }
}

/// Monte-Carlo estimate of the empirical Rademacher complexity of the loss class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    /// Set when no ascent run improved on its starting point.
    pub no_improvement: bool,
}

fn random_start<R: Rng>(
    ball: &ParameterBall,
    sample: &Dataset,
    spec: &SurrogateSpec,
    rng: &mut R,
) -> Result<ScoreModel> {
    let mut model = ScoreModel::new(
        ball.architecture,
        sample.input_dim(),
        ball.hidden_dim,
        sample.space.size(),
        rng,
    )?;
    if spec.is_constrained() {
        model.project_outputs(ConstraintScope::Augmented, sample.space.classes());
    }
    let norm = model.norm();
    if norm > 0.0 {
        let target = ball.radius * rng.random_range(0.0f64..1.0).sqrt();
        model.weights.iter_mut().for_each(|w| *w *= target / norm);
    }
    Ok(model)
}

fn signed_objective(model: &ScoreModel, sample: &Dataset, spec: &SurrogateSpec, signs: &[f64], grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let indices: Vec<usize> = (0..sample.len()).collect();
    accumulate_gradient(model, sample, spec, &indices, Some(signs), grad)
}

fn one_trial(
    spec: &SurrogateSpec,
    sample: &Dataset,
    ball: &ParameterBall,
    seed: u64,
    trial: usize,
    options: &RademacherOptions,
) -> Result<(f64, bool)> {
    let mut rng = rng_for(seed, "rademacher", trial as u64);
    let m = sample.len() as f64;
    let signs: Vec<f64> = (0..sample.len())
        .map(|_| if rng.random_bool(0.5) { 1.0 / m } else { -1.0 / m })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut improved = false;
    for _ in 0..options.restarts.max(1) {
        let mut model = random_start(ball, sample, spec, &mut rng)?;
        let mut grad = vec![0.0; model.weights.len()];
        let mut optimizer = Optimizer::new(OptimizerKind::default(), model.weights.len());
        let start = signed_objective(&model, sample, spec, &signs, &mut grad);
        let mut run_best = start;
        for _ in 0..options.steps {
            grad.iter_mut().for_each(|g| *g = -*g);
            optimizer.step(&mut model.weights, &grad, options.learning_rate);
            if spec.is_constrained() {
                model.project_outputs(ConstraintScope::Augmented, sample.space.classes());
            }
            model.clip_norm(ball.radius);
            let value = signed_objective(&model, sample, spec, &signs, &mut grad);
            run_best = run_best.max(value);
        }
        if run_best > start {
            improved = true;
        }
        best = best.max(run_best);
    }
    if !best.is_finite() {
        return Err(Error::OptimizationFailure { best });
    }
    Ok((best, improved))
}

/// Averages, over sign draws, the supremum of `(1/m) sum_i sigma_i L(h, x_i, y_i)` over the ball.
///
/// Each supremum comes from projected gradient ascent with restarts, so the
/// estimate is a lower bound on the exact quantity.
pub fn estimate_rademacher(
    spec: &SurrogateSpec,
    sample: &Dataset,
    ball: &ParameterBall,
    trials: usize,
    seed: u64,
    options: &RademacherOptions,
) -> Result<RademacherEstimate> {
    if sample.is_empty() {
        return Err(Error::Domain("Rademacher estimate needs a nonempty sample".to_string()));
    }
    if trials == 0 {
        return Err(Error::Domain("Rademacher estimate needs at least one trial".to_string()));
    }
    if !(ball.radius >= 0.0 && ball.radius.is_finite()) {
        return Err(Error::Domain(format!("radius {} must be >= 0", ball.radius)));
    }
    let results = (0..trials)
        .into_par_iter()
        .map(|t| one_trial(spec, sample, ball, seed, t, options))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mean = values.iter().sum::<f64>() / trials as f64;
    let std_error = if trials > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(RademacherEstimate {
        estimate: mean,
        std_error,
        trials,
        no_improvement: results.iter().all(|r| !r.1),
    })
}
