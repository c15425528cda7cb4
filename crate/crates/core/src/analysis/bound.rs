use serde::{Deserialize, Serialize};

use super::{cost_sums, expected_losses_with, HypothesisClassSpec, MinimizeOptions};
use crate::domain::{ExpertPanel, FiniteDistribution};
use crate::error::{Error, Result};
use crate::losses::{gamma_of, GammaTransform, SurrogateSpec};

/// Additive slack allowed when checking an inequality.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Sums of the per-expert lower and upper cost bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSums {
    pub lower: f64,
    pub upper: f64,
}

/// Both sides of the consistency bound for one (distribution, panel, hypothesis).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    /// Deferral estimation error plus the deferral minimizability gap.
    pub lhs: f64,
    /// Right-hand side; constants dropped when the transform is linear.
    pub rhs: f64,
    /// Right-hand side with the cost constants kept.
    pub rhs_with_constants: f64,
    pub slack: f64,
    pub holds: bool,
    pub surrogate_regret: f64,
    pub deferral_regret: f64,
    pub surrogate_gap: f64,
    pub surrogate_approximation: f64,
    pub deferral_gap: f64,
    pub deferral_approximation: f64,
    pub gamma: GammaTransform,
    pub cost_sums: CostSums,
}

/// Evaluates both sides of the consistency bound.
///
/// Only the class of all measurable functions is supported, the class the
/// shipped transforms are stated for. Costs must lie in `[0, 1]`.
pub fn verify_bound(
    spec: &SurrogateSpec,
    d: &FiniteDistribution,
    panel: &ExpertPanel,
    scores: &[Vec<f64>],
    class: &HypothesisClassSpec,
) -> Result<BoundRecord> {
    verify_bound_with(spec, d, panel, scores, class, &MinimizeOptions::default())
}

/// As [`verify_bound`] with explicit minimizer settings.
pub fn verify_bound_with(
    spec: &SurrogateSpec,
    d: &FiniteDistribution,
    panel: &ExpertPanel,
    scores: &[Vec<f64>],
    class: &HypothesisClassSpec,
    options: &MinimizeOptions,
) -> Result<BoundRecord> {
    if *class != HypothesisClassSpec::AllMeasurable {
        return Err(Error::Unsupported(format!(
            "bound transforms are only available for all_measurable, not {}",
            class.label()
        )));
    }
    panel.check_unit_costs()?;
    let report = expected_losses_with(spec, d, panel, scores, class, options)?;
    let space = panel.space();
    let gamma = gamma_of(spec, space);
    let sums = cost_sums(panel);
    let lhs = report.deferral_regret + report.deferral_gap;
    let eps = report.surrogate_regret + report.surrogate_gap;
    let rhs = gamma.bound(eps, space.experts(), sums.lower, sums.upper);
    let rhs_with_constants = gamma.bound_with_constants(eps, space.experts(), sums.lower, sums.upper);
    let holds = lhs <= rhs + BOUND_TOLERANCE && lhs <= rhs_with_constants + BOUND_TOLERANCE;
    Ok(BoundRecord {
        lhs,
        rhs,
        rhs_with_constants,
        slack: rhs - lhs,
        holds,
        surrogate_regret: report.surrogate_regret,
        deferral_regret: report.deferral_regret,
        surrogate_gap: report.surrogate_gap,
        surrogate_approximation: report.surrogate_approximation,
        deferral_gap: report.deferral_gap,
        deferral_approximation: report.deferral_approximation,
        gamma,
        cost_sums: sums,
    })
}

/// Finite-sample bound on the deferral estimation error of the empirical minimizer.
///
/// Evaluates `(n_e + 1 - sum lower) Gamma((4 R + 2 B sqrt(log(2/delta) / 2m) + M) / (n_e + 1 - sum upper))`,
/// dropping the cost constants when `gamma` is linear.
#[allow(clippy::too_many_arguments)]
pub fn learning_bound_rhs(
    gamma: &GammaTransform,
    rademacher: f64,
    b_l: f64,
    m: usize,
    delta: f64,
    surrogate_gap: f64,
    experts: usize,
    costs: CostSums,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    if m == 0 {
        return Err(Error::Domain("sample size must be positive".to_string()));
    }
    let deviation = ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt();
    let eps = 4.0 * rademacher + 2.0 * b_l * deviation + surrogate_gap;
    Ok(gamma.bound(eps, experts, costs.lower, costs.upper))
}
