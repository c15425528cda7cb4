//! Random finite instances and hypotheses for property sweeps.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    build_q_vector, Expert, ExpertPanel, FiniteDistribution, LabelSpace, Point,
};
use crate::error::Result;

/// Size limits of generated instances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceLimits {
    pub max_points: usize,
    pub max_classes: usize,
    pub max_experts: usize,
}

impl InstanceLimits {
    /// Small instances used by the exhaustive regret oracle.
    pub const ORACLE: InstanceLimits = InstanceLimits {
        max_points: 5,
        max_classes: 3,
        max_experts: 2,
    };

    /// Instances used by the bound sweep.
    pub const SWEEP: InstanceLimits = InstanceLimits {
        max_points: 6,
        max_classes: 4,
        max_experts: 3,
    };
}

/// A distribution, a panel with costs in `[0, 1]`, and one score vector per point.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub space: LabelSpace,
    pub distribution: FiniteDistribution,
    pub panel: ExpertPanel,
    pub scores: Vec<Vec<f64>>,
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

fn random_conditional<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => {
            let mut p = vec![0.0; n];
            p[rng.random_range(0..n)] = 1.0;
            p
        }
        1 => {
            let raw: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.5) { Exp1.sample(rng) } else { 0.0 })
                .collect();
            if raw.iter().all(|&v| v == 0.0) {
                normalized(vec![1.0; n])
            } else {
                normalized(raw)
            }
        }
        2 => {
            let a = rng.random_range(0..n);
            let b = (a + 1 + rng.random_range(0..n - 1)) % n;
            let mut p = vec![0.0; n];
            let eps: f64 = rng.random_range(-0.01..0.01);
            p[a] = 0.5 + eps;
            p[b] = 0.5 - eps;
            p
        }
        _ => normalized((0..n).map(|_| Exp1.sample(rng)).collect()),
    }
}

fn random_expert<R: Rng>(rng: &mut R, points: usize, n: usize) -> Result<Expert> {
    let predictions: Vec<usize> = (0..points).map(|_| rng.random_range(0..n)).collect();
    match rng.random_range(0..3) {
        0 => Expert::misclassification(predictions, n),
        1 => Expert::with_base_cost(predictions, n, rng.random_range(0.0..0.5)),
        _ => {
            let lower: f64 = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.6) };
            let upper: f64 = if rng.random_bool(0.3) { 1.0 } else { rng.random_range(lower..=1.0) };
            let costs = (0..points * n)
                .map(|_| match rng.random_range(0..4) {
                    0 => lower,
                    1 => upper,
                    _ => rng.random_range(lower..=upper),
                })
                .collect();
            Expert::from_table(predictions, n, costs, lower, upper)
        }
    }
}

/// Random score vector; mixes broad draws, near-ties and vectors aligned with `q_bar`.
pub fn random_scores<R: Rng>(rng: &mut R, q_bar: &[f64]) -> Vec<f64> {
    let k = q_bar.len();
    let normal = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };
    match rng.random_range(0..4) {
        0 => {
            let scale = rng.random_range(0.1..5.0);
            (0..k).map(|_| scale * normal(rng)).collect()
        }
        1 => {
            let mut s: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
            let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties = rng.random_range(2..=k.min(3));
            for _ in 0..ties {
                let i = rng.random_range(0..k);
                s[i] = top + 1e-3 * normal(rng);
            }
            s
        }
        2 => {
            let noise = rng.random_range(0.0..0.5);
            q_bar
                .iter()
                .map(|p| p.max(1e-4).ln() + noise * normal(rng))
                .collect()
        }
        _ => {
            let mut s: Vec<f64> = (0..k).map(|_| 0.3 * normal(rng)).collect();
            let i = rng.random_range(0..k);
            s[i] += rng.random_range(0.0..4.0);
            s
        }
    }
}

/// Draws an instance within `limits`; costs are normalized into `[0, 1]`.
pub fn random_instance<R: Rng>(rng: &mut R, limits: InstanceLimits) -> Result<RandomInstance> {
    let n = rng.random_range(2..=limits.max_classes.max(2));
    let n_e = rng.random_range(1..=limits.max_experts.max(1));
    let m = rng.random_range(1..=limits.max_points.max(1));
    let space = LabelSpace::new(n, n_e)?;
    let mut weights: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(0.1) { 0.0 } else { Exp1.sample(rng) })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let weights = normalized(weights);
    let points = weights
        .into_iter()
        .enumerate()
        .map(|(i, weight)| Point {
            id: i as u64,
            features: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            weight,
            conditional: random_conditional(rng, n),
        })
        .collect();
    let distribution = FiniteDistribution::new(n, points)?;
    let experts = (0..n_e)
        .map(|_| random_expert(rng, m, n))
        .collect::<Result<Vec<_>>>()?;
    let panel = ExpertPanel::new(space, experts)?.normalized();
    let mut scores = Vec::with_capacity(m);
    for x in 0..m {
        let q = build_q_vector(&distribution, &panel, x)?;
        scores.push(random_scores(rng, &q.normalized));
    }
    Ok(RandomInstance {
        space,
        distribution,
        panel,
        scores,
    })
}
