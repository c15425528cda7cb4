//! Per-point infima of the conditional surrogate `sum_y q(y) l(s, y)`.

use serde::{Deserialize, Serialize};

use super::HypothesisClassSpec;
use crate::error::{Error, Result};
use crate::losses::{evaluate, SurrogateSpec};

/// Settings of the projected-gradient minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub restarts: usize,
    pub max_steps: usize,
    pub initial_step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_steps: 2000,
            initial_step: 0.1,
            tolerance: 1e-9,
            seed: 0x1d2d,
        }
    }
}

/// Best value found and, when finite, a score vector attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Infimum {
    pub value: f64,
    pub argmin: Option<Vec<f64>>,
}

/// Conditional surrogate `sum_y q(y) l(s, y)` and, optionally, its gradient.
pub fn weighted_loss(spec: &SurrogateSpec, q: &[f64], s: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let mut total = 0.0;
    match grad {
        Some(g) => {
            g.iter_mut().for_each(|v| *v = 0.0);
            for (y, &w) in q.iter().enumerate() {
                if w != 0.0 {
                    total += w * evaluate(spec, s, y, Some(&mut *g), w).value;
                }
            }
        }
        None => {
            for (y, &w) in q.iter().enumerate() {
                if w != 0.0 {
                    total += w * evaluate(spec, s, y, None, w).value;
                }
            }
        }
    }
    total
}

/// Exact infimum over all score vectors, where a closed form exists.
///
/// Returns `None` for the sum-of-squares margin loss, which is minimized numerically.
pub fn closed_form_infimum(spec: &SurrogateSpec, q: &[f64]) -> Option<f64> {
    let total: f64 = q.iter().sum();
    let k = q.len() as f64;
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack: Vec<f64> = q.iter().map(|v| (total - v).max(0.0)).collect();
    let value = match *spec {
        SurrogateSpec::CompSumLog => q
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| -v * (v / total).ln())
            .sum(),
        SurrogateSpec::CompSumExp | SurrogateSpec::SumExp => {
            let root: f64 = q.iter().map(|v| v.sqrt()).sum();
            root * root - total
        }
        SurrogateSpec::CompSumMae => total - max,
        SurrogateSpec::CompSumGce { alpha } => {
            if alpha >= 1.0 {
                (total - max) / alpha
            } else {
                let power = 1.0 / (1.0 - alpha);
                let top = max.max(f64::MIN_POSITIVE);
                let weights: Vec<f64> = q.iter().map(|v| (v / top).powf(power)).collect();
                let z: f64 = weights.iter().sum();
                let attained: f64 = q
                    .iter()
                    .zip(&weights)
                    .map(|(v, w)| v * (w / z).powf(alpha))
                    .sum();
                (total - attained) / alpha
            }
        }
        SurrogateSpec::SumRho { .. } => {
            let mut sorted = q.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            sorted.iter().enumerate().map(|(r, v)| r as f64 * v).sum()
        }
        SurrogateSpec::ConstrainedHinge => {
            k * slack.iter().copied().fold(f64::INFINITY, f64::min)
        }
        SurrogateSpec::ConstrainedRho { .. } => slack.iter().copied().fold(f64::INFINITY, f64::min),
        SurrogateSpec::ConstrainedExp => {
            if slack.iter().any(|&w| w <= 0.0) {
                0.0
            } else {
                k * (slack.iter().map(|w| w.ln()).sum::<f64>() / k).exp()
            }
        }
        SurrogateSpec::ConstrainedSq => {
            if slack.iter().any(|&w| w <= 0.0) {
                0.0
            } else {
                k * k / slack.iter().map(|w| 1.0 / w).sum::<f64>()
            }
        }
        SurrogateSpec::SumSq => return None,
    };
    Some(value)
}

/// Projects onto `{|s_i| <= lambda}` intersected, for constrained specs, with `{sum s = 0}`.
pub(crate) fn project(s: &mut [f64], lambda: Option<f64>, zero_sum: bool) {
    match (lambda, zero_sum) {
        (None, false) => {}
        (None, true) => {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            s.iter_mut().for_each(|v| *v -= mean);
        }
        (Some(l), false) => s.iter_mut().for_each(|v| *v = v.clamp(-l, l)),
        (Some(l), true) => {
            let shifted_sum = |tau: f64| s.iter().map(|v| (v - tau).clamp(-l, l)).sum::<f64>();
            let lo_init = s.iter().copied().fold(f64::INFINITY, f64::min) - l;
            let hi_init = s.iter().copied().fold(f64::NEG_INFINITY, f64::max) + l;
            let (mut lo, mut hi) = (lo_init, hi_init);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if shifted_sum(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                    break;
                }
            }
            let tau = 0.5 * (lo + hi);
            s.iter_mut().for_each(|v| *v = (*v - tau).clamp(-l, l));
            let residual = s.iter().sum::<f64>();
            if residual != 0.0 {
                let free: Vec<usize> = (0..s.len()).filter(|&i| s[i].abs() < l).collect();
                if !free.is_empty() {
                    let share = residual / free.len() as f64;
                    for i in free {
                        s[i] = (s[i] - share).clamp(-l, l);
                    }
                }
            }
        }
    }
}

fn starting_points(q: &[f64], lambda: Option<f64>, options: &MinimizeOptions) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let k = q.len();
    let total: f64 = q.iter().sum();
    let reach = lambda.unwrap_or(3.0);
    let mut starts = vec![vec![0.0; k]];
    starts.push(
        q.iter()
            .map(|v| (v / total).max(1e-12).ln().clamp(-reach, reach))
            .collect(),
    );
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    for top in 1..k.min(3) + 1 {
        let mut s = vec![-reach; k];
        for &i in &order[..top] {
            s[i] = reach;
        }
        starts.push(s);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(options.seed);
    while starts.len() < options.restarts.max(1) {
        starts.push((0..k).map(|_| rng.random_range(-reach..=reach)).collect());
    }
    starts.truncate(options.restarts.max(1));
    starts
}

/// Polishes a point with coordinate moves (pairwise transfers under the zero-sum
/// constraint), which escape the kinks where gradient steps stall.
fn pattern_search(
    spec: &SurrogateSpec,
    q: &[f64],
    s: &mut [f64],
    mut value: f64,
    lambda: Option<f64>,
    zero_sum: bool,
) -> f64 {
    let k = s.len();
    let mut trial = s.to_vec();
    let mut delta = 1.0;
    while delta > 1e-11 {
        let mut improved = true;
        let mut passes = 0;
        while improved && passes < 50 {
            improved = false;
            passes += 1;
            for i in 0..k {
                let partners: Vec<Option<usize>> = if zero_sum {
                    (0..k).filter(|&j| j != i).map(Some).collect()
                } else {
                    vec![None]
                };
                for j in partners {
                    for sign in [1.0, -1.0] {
                        trial.copy_from_slice(s);
                        trial[i] += sign * delta;
                        if let Some(j) = j {
                            trial[j] -= sign * delta;
                        }
                        if let Some(l) = lambda {
                            if trial.iter().any(|v| v.abs() > l) {
                                continue;
                            }
                        }
                        let candidate = weighted_loss(spec, q, &trial, None);
                        if candidate < value {
                            value = candidate;
                            s.copy_from_slice(&trial);
                            improved = true;
                        }
                    }
                }
            }
        }
        delta *= 0.5;
    }
    value
}

/// Projected gradient descent with step halving on non-improvement, from several starts.
pub fn numeric_infimum(
    spec: &SurrogateSpec,
    q: &[f64],
    class: &HypothesisClassSpec,
    options: &MinimizeOptions,
) -> Result<Infimum> {
    let lambda = class.lambda();
    let zero_sum = spec.is_constrained();
    let k = q.len();
    let mut best_value = f64::INFINITY;
    let mut best_point = None;
    let mut grad = vec![0.0; k];
    let mut trial = vec![0.0; k];
    for mut s in starting_points(q, lambda, options) {
        project(&mut s, lambda, zero_sum);
        let mut value = weighted_loss(spec, q, &s, None);
        let mut step = options.initial_step;
        let mut stalled = 0;
        for _ in 0..options.max_steps {
            weighted_loss(spec, q, &s, Some(&mut grad));
            let mut improved = false;
            while step > 1e-16 {
                for i in 0..k {
                    trial[i] = s[i] - step * grad[i];
                }
                project(&mut trial, lambda, zero_sum);
                let candidate = weighted_loss(spec, q, &trial, None);
                if candidate < value {
                    let gain = value - candidate;
                    s.copy_from_slice(&trial);
                    value = candidate;
                    improved = true;
                    step *= 2.0;
                    stalled = if gain <= options.tolerance * 1e-3 * (1.0 + value.abs()) {
                        stalled + 1
                    } else {
                        0
                    };
                    break;
                }
                step *= 0.5;
            }
            if !improved || stalled >= 20 {
                break;
            }
        }
        value = pattern_search(spec, q, &mut s, value, lambda, zero_sum);
        if value < best_value {
            best_value = value;
            best_point = Some(s);
        }
    }
    if !best_value.is_finite() {
        return Err(Error::OptimizationFailure { best: best_value });
    }
    Ok(Infimum {
        value: best_value,
        argmin: best_point,
    })
}

/// Infimum of the conditional surrogate over the score vectors admitted by `class`.
pub fn pointwise_infimum(
    spec: &SurrogateSpec,
    q: &[f64],
    class: &HypothesisClassSpec,
    options: &MinimizeOptions,
) -> Result<Infimum> {
    if let HypothesisClassSpec::AllMeasurable = class {
        if let Some(value) = closed_form_infimum(spec, q) {
            return Ok(Infimum {
                value,
                argmin: None,
            });
        }
        let numeric = numeric_infimum(spec, q, class, &convex_options(options))?;
        return Ok(numeric);
    }
    numeric_infimum(spec, q, class, options)
}

fn convex_options(options: &MinimizeOptions) -> MinimizeOptions {
    MinimizeOptions {
        restarts: options.restarts.min(4),
        max_steps: options.max_steps.max(20_000),
        tolerance: options.tolerance * 1e-3,
        ..*options
    }
}
