//! Deferral loss, the cost-weighted surrogate family and its base losses.
//!
//! A surrogate is `l(s, y) + sum_j (1 - c_j) l(s, n + j)` where `l` is one of
//! eleven multiclass losses over the augmented label set.

mod base;
mod gamma;
mod spec;

pub use base::{kink_distance, Evaluation, EXP_CLAMP};
pub use gamma::{gamma_of, GammaShape, GammaTransform};
pub use spec::{Family, SurrogateSpec, DEFAULT_ALPHA, DEFAULT_RHO};

pub(crate) use base::evaluate;

use serde::{Deserialize, Serialize};

use crate::domain::{check_finite, predict_label, Decision, LabelSpace};
use crate::error::{Error, Result};

/// Largest tolerated `|sum s|` for constrained losses.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-6;

/// Which labels the zero-sum constraint ranges over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintScope {
    /// All `n + n_e` augmented labels.
    #[default]
    Augmented,
    /// The `n` class labels only.
    ClassesOnly,
}

impl ConstraintScope {
    fn range(self, len: usize, classes: usize) -> std::ops::Range<usize> {
        match self {
            ConstraintScope::Augmented => 0..len,
            ConstraintScope::ClassesOnly => 0..classes.min(len),
        }
    }
}

/// Subtracts the mean so the scores sum to zero.
pub fn project_constraint(s: &[f64]) -> Vec<f64> {
    let mut out = s.to_vec();
    project_constraint_in_place(&mut out, ConstraintScope::Augmented, s.len());
    out
}

/// Subtracts the mean over the scoped labels, in place.
pub fn project_constraint_in_place(s: &mut [f64], scope: ConstraintScope, classes: usize) {
    let range = scope.range(s.len(), classes);
    if range.is_empty() {
        return;
    }
    let mean = s[range.clone()].iter().sum::<f64>() / range.len() as f64;
    for v in &mut s[range] {
        *v -= mean;
    }
}

/// Fails when the scoped scores do not sum to zero within [`CONSTRAINT_TOLERANCE`].
pub fn check_constraint(s: &[f64], scope: ConstraintScope, classes: usize) -> Result<()> {
    let sum: f64 = s[scope.range(s.len(), classes)].iter().sum();
    if sum.abs() > CONSTRAINT_TOLERANCE {
        return Err(Error::Constraint { sum });
    }
    Ok(())
}

fn check_base_input(spec: &SurrogateSpec, s: &[f64], y: usize) -> Result<()> {
    check_finite(s)?;
    if y >= s.len() {
        return Err(Error::InvalidLabel {
            label: y,
            bound: s.len(),
        });
    }
    if spec.is_constrained() {
        check_constraint(s, ConstraintScope::Augmented, s.len())?;
    }
    Ok(())
}

/// Base loss `l(s, y)` for an augmented label `y`.
pub fn base_loss(spec: &SurrogateSpec, s: &[f64], y: usize) -> Result<f64> {
    Ok(base_loss_detailed(spec, s, y)?.value)
}

/// Base loss together with the exponent-saturation flag.
pub fn base_loss_detailed(spec: &SurrogateSpec, s: &[f64], y: usize) -> Result<Evaluation> {
    check_base_input(spec, s, y)?;
    Ok(evaluate(spec, s, y, None, 1.0))
}

/// Gradient of the base loss in the scores.
pub fn base_loss_gradient(spec: &SurrogateSpec, s: &[f64], y: usize) -> Result<Vec<f64>> {
    check_base_input(spec, s, y)?;
    let mut grad = vec![0.0; s.len()];
    evaluate(spec, s, y, Some(&mut grad), 1.0);
    Ok(grad)
}

fn check_surrogate_input(space: LabelSpace, s: &[f64], y: usize, costs: &[f64]) -> Result<()> {
    space.check_scores(s)?;
    space.check_class(y)?;
    if costs.len() != space.experts() {
        return Err(Error::InvalidPanel(format!(
            "{} costs given for {} experts",
            costs.len(),
            space.experts()
        )));
    }
    Ok(())
}

/// Deferral loss: 0/1 error when predicting, the expert's cost when deferring.
///
/// `costs[j]` is `c_j(x, y)` at the current input.
pub fn deferral_loss(space: LabelSpace, s: &[f64], y: usize, costs: &[f64]) -> Result<f64> {
    check_surrogate_input(space, s, y, costs)?;
    Ok(match space.decision(predict_label(s)?)? {
        Decision::Predict(label) => {
            if label == y {
                0.0
            } else {
                1.0
            }
        }
        Decision::Defer(j) => costs[j],
    })
}

/// Cost-weighted surrogate without validation; adds its gradient into `grad` when given.
pub(crate) fn surrogate_eval(
    spec: &SurrogateSpec,
    classes: usize,
    s: &[f64],
    y: usize,
    costs: &[f64],
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let mut total = evaluate(spec, s, y, grad.as_deref_mut(), 1.0).value;
    for (j, c) in costs.iter().enumerate() {
        let w = 1.0 - c;
        if w != 0.0 {
            total += w * evaluate(spec, s, classes + j, grad.as_deref_mut(), w).value;
        }
    }
    total
}

/// Surrogate `l(s, y) + sum_j (1 - c_j) l(s, n + j)`.
pub fn surrogate_loss(
    spec: &SurrogateSpec,
    space: LabelSpace,
    s: &[f64],
    y: usize,
    costs: &[f64],
) -> Result<f64> {
    check_surrogate_input(space, s, y, costs)?;
    if spec.is_constrained() {
        check_constraint(s, ConstraintScope::Augmented, space.classes())?;
    }
    Ok(surrogate_eval(spec, space.classes(), s, y, costs, None))
}

/// Gradient of [`surrogate_loss`] in the scores (right derivatives at kinks).
pub fn surrogate_gradient(
    spec: &SurrogateSpec,
    space: LabelSpace,
    s: &[f64],
    y: usize,
    costs: &[f64],
) -> Result<Vec<f64>> {
    check_surrogate_input(space, s, y, costs)?;
    if spec.is_constrained() {
        check_constraint(s, ConstraintScope::Augmented, space.classes())?;
    }
    let mut grad = vec![0.0; s.len()];
    surrogate_eval(spec, space.classes(), s, y, costs, Some(&mut grad));
    Ok(grad)
}
