//! Exact conditional regrets, minimizability gaps and bound verification on finite distributions.

mod bound;
mod gap;
mod infimum;
pub mod random;
mod rademacher;

pub use bound::{learning_bound_rhs, verify_bound, BoundRecord, CostSums, BOUND_TOLERANCE};
pub use gap::{binary_exp_gap, BinaryExpGap};
pub use infimum::{
    closed_form_infimum, numeric_infimum, pointwise_infimum, weighted_loss, Infimum,
    MinimizeOptions,
};
pub use rademacher::{estimate_rademacher, ParameterBall, RademacherEstimate, RademacherOptions};

use serde::{Deserialize, Serialize};

use crate::domain::{
    build_q_vector, predict_label, reachable_labels, ExpertPanel, FiniteDistribution, ModelClass,
    QVector,
};
use crate::error::{Error, Result};
use crate::losses::{check_constraint, ConstraintScope, SurrogateSpec};

/// Per-point score class used when computing best-in-class quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisClassSpec {
    /// Scores are unconstrained at every point.
    AllMeasurable,
    /// Every score lies in `[-lambda, lambda]`.
    BoundedScores { lambda: f64 },
}

impl HypothesisClassSpec {
    pub(crate) fn lambda(&self) -> Option<f64> {
        match self {
            HypothesisClassSpec::AllMeasurable => None,
            HypothesisClassSpec::BoundedScores { lambda } => Some(*lambda),
        }
    }

    /// Short name used in reports.
    pub fn label(&self) -> String {
        match self {
            HypothesisClassSpec::AllMeasurable => "all_measurable".to_string(),
            HypothesisClassSpec::BoundedScores { lambda } => format!("bounded_scores({lambda:?})"),
        }
    }

    fn model_class(&self) -> ModelClass {
        match self {
            HypothesisClassSpec::AllMeasurable => ModelClass::AllMeasurable,
            HypothesisClassSpec::BoundedScores { lambda } => {
                ModelClass::BoundedScores { lambda: *lambda }
            }
        }
    }

    /// Maps a score vector into the class (and onto the zero-sum plane when `zero_sum`).
    pub fn project(&self, s: &[f64], zero_sum: bool) -> Vec<f64> {
        let mut out = s.to_vec();
        infimum::project(&mut out, self.lambda(), zero_sum);
        out
    }

    fn check_member(&self, s: &[f64]) -> Result<()> {
        if let Some(l) = self.lambda() {
            if let Some(v) = s.iter().find(|v| v.abs() > l + 1e-12) {
                return Err(Error::Domain(format!(
                    "score {v} lies outside the bounded class [-{l}, {l}]"
                )));
            }
        }
        Ok(())
    }
}

/// Conditional loss, its best value, and their difference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conditional {
    pub loss: f64,
    pub optimal: f64,
    pub regret: f64,
}

/// Conditional deferral loss `1 - q(h(x))` against the best label in `q`.
pub fn conditional_deferral(q: &QVector, s: &[f64]) -> Result<Conditional> {
    conditional_deferral_over(q, s, None)
}

fn conditional_deferral_over(q: &QVector, s: &[f64], reachable: Option<&[usize]>) -> Result<Conditional> {
    if s.len() != q.q.len() {
        return Err(Error::ScoreLength {
            expected: q.q.len(),
            found: s.len(),
        });
    }
    let chosen = q.q[predict_label(s)?];
    let best = match reachable {
        Some(labels) => labels
            .iter()
            .map(|&y| q.q[y])
            .fold(f64::NEG_INFINITY, f64::max),
        None => q.max(),
    };
    Ok(Conditional {
        loss: 1.0 - chosen,
        optimal: 1.0 - best,
        regret: best - chosen,
    })
}

/// Conditional surrogate `sum_y q(y) l(s, y)` against its infimum over `class`.
pub fn conditional_surrogate(
    spec: &SurrogateSpec,
    q: &QVector,
    s: &[f64],
    class: &HypothesisClassSpec,
) -> Result<Conditional> {
    conditional_surrogate_with(spec, q, s, class, &MinimizeOptions::default())
}

/// As [`conditional_surrogate`] with explicit minimizer settings.
pub fn conditional_surrogate_with(
    spec: &SurrogateSpec,
    q: &QVector,
    s: &[f64],
    class: &HypothesisClassSpec,
    options: &MinimizeOptions,
) -> Result<Conditional> {
    let loss = conditional_surrogate_value(spec, q, s, class)?;
    let optimal = pointwise_infimum(spec, &q.q, class, options)?.value;
    Ok(Conditional {
        loss,
        optimal,
        regret: loss - optimal,
    })
}

fn conditional_surrogate_value(
    spec: &SurrogateSpec,
    q: &QVector,
    s: &[f64],
    class: &HypothesisClassSpec,
) -> Result<f64> {
    if s.len() != q.q.len() {
        return Err(Error::ScoreLength {
            expected: q.q.len(),
            found: s.len(),
        });
    }
    crate::domain::check_finite(s)?;
    if spec.is_constrained() {
        check_constraint(s, ConstraintScope::Augmented, s.len())?;
    }
    class.check_member(s)?;
    Ok(weighted_loss(spec, &q.q, s, None))
}

/// Conditional quantities at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRegret {
    pub id: u64,
    pub weight: f64,
    pub deferral: Conditional,
    pub surrogate: Conditional,
    /// Infimum of the conditional surrogate over all measurable functions.
    pub surrogate_unrestricted: f64,
    /// Best conditional deferral loss over all measurable functions.
    pub deferral_unrestricted: f64,
}

/// Expected losses, regrets, minimizability gaps and approximation errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub per_point: Vec<PointRegret>,
    pub deferral_loss: f64,
    pub best_deferral_loss: f64,
    pub deferral_regret: f64,
    pub surrogate_loss: f64,
    pub best_surrogate_loss: f64,
    pub surrogate_regret: f64,
    pub deferral_gap: f64,
    pub deferral_approximation: f64,
    pub surrogate_gap: f64,
    pub surrogate_approximation: f64,
}

/// Aggregates per-point conditional quantities under the marginal weights.
///
/// The class acts pointwise, so best-in-class expected losses are expectations
/// of per-point optima.
pub fn expected_losses(
    spec: &SurrogateSpec,
    d: &FiniteDistribution,
    panel: &ExpertPanel,
    scores: &[Vec<f64>],
    class: &HypothesisClassSpec,
) -> Result<RegretReport> {
    expected_losses_with(spec, d, panel, scores, class, &MinimizeOptions::default())
}

/// As [`expected_losses`] with explicit minimizer settings.
pub fn expected_losses_with(
    spec: &SurrogateSpec,
    d: &FiniteDistribution,
    panel: &ExpertPanel,
    scores: &[Vec<f64>],
    class: &HypothesisClassSpec,
    options: &MinimizeOptions,
) -> Result<RegretReport> {
    let space = panel.space();
    if scores.len() != d.len() {
        return Err(Error::UnknownPoint(format!(
            "score map covers {} points, distribution has {}",
            scores.len(),
            d.len()
        )));
    }
    let reachable = reachable_labels(space, &class.model_class());
    let mut per_point = Vec::with_capacity(d.len());
    for (x, s) in scores.iter().enumerate() {
        space.check_scores(s)?;
        let q = build_q_vector(d, panel, x)?;
        let deferral = conditional_deferral_over(&q, s, Some(&reachable))?;
        let loss = conditional_surrogate_value(spec, &q, s, class)?;
        let optimal = pointwise_infimum(spec, &q.q, class, options)?.value;
        let unrestricted = match class {
            HypothesisClassSpec::AllMeasurable => optimal,
            _ => pointwise_infimum(spec, &q.q, &HypothesisClassSpec::AllMeasurable, options)?.value,
        };
        per_point.push(PointRegret {
            id: d.points()[x].id,
            weight: d.points()[x].weight,
            deferral,
            surrogate: Conditional {
                loss,
                optimal,
                regret: loss - optimal,
            },
            surrogate_unrestricted: unrestricted.min(optimal),
            deferral_unrestricted: 1.0 - q.max(),
        });
    }
    Ok(aggregate(per_point))
}

fn aggregate(per_point: Vec<PointRegret>) -> RegretReport {
    let mean = |f: &dyn Fn(&PointRegret) -> f64| per_point.iter().map(|p| p.weight * f(p)).sum::<f64>();
    let deferral_loss = mean(&|p| p.deferral.loss);
    let best_deferral_loss = mean(&|p| p.deferral.optimal);
    let deferral_inf = mean(&|p| p.deferral.optimal);
    let deferral_all = mean(&|p| p.deferral_unrestricted);
    let surrogate_loss = mean(&|p| p.surrogate.loss);
    let best_surrogate_loss = mean(&|p| p.surrogate.optimal);
    let surrogate_inf = best_surrogate_loss;
    let surrogate_all = mean(&|p| p.surrogate_unrestricted);
    RegretReport {
        deferral_loss,
        best_deferral_loss,
        deferral_regret: mean(&|p| p.deferral.regret),
        surrogate_loss,
        best_surrogate_loss,
        surrogate_regret: mean(&|p| p.surrogate.regret),
        deferral_gap: best_deferral_loss - deferral_inf,
        deferral_approximation: best_deferral_loss - deferral_all,
        surrogate_gap: best_surrogate_loss - surrogate_inf,
        surrogate_approximation: best_surrogate_loss - surrogate_all,
        per_point,
    }
}

/// Bayes deferral loss `E_x[1 - max_y q(x, y)]` of a distribution and panel.
pub fn bayes_deferral_loss(d: &FiniteDistribution, panel: &ExpertPanel) -> Result<f64> {
    let mut total = 0.0;
    for x in 0..d.len() {
        let q = build_q_vector(d, panel, x)?;
        total += d.points()[x].weight * (1.0 - q.max());
    }
    Ok(total)
}

/// Exact expected deferral loss `E_x[1 - q(x, h(x))]` of a score map.
pub fn expected_deferral_loss(
    d: &FiniteDistribution,
    panel: &ExpertPanel,
    scores: &[Vec<f64>],
) -> Result<f64> {
    let mut total = 0.0;
    for (x, s) in scores.iter().enumerate() {
        let q = build_q_vector(d, panel, x)?;
        total += d.points()[x].weight * (1.0 - q.q[predict_label(s)?]);
    }
    Ok(total)
}

pub(crate) fn cost_sums(panel: &ExpertPanel) -> CostSums {
    let bounds = panel.effective_bounds();
    CostSums {
        lower: bounds.iter().map(|b| b.0).sum(),
        upper: bounds.iter().map(|b| b.1).sum(),
    }
}
