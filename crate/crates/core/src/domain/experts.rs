use serde::{Deserialize, Serialize};

use super::LabelSpace;
use crate::error::{Error, Result};

/// How an expert's cost table was produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// `c(x, y) = 1[g(x) != y]`.
    Misclassification,
    /// `c(x, y) = 1[g(x) != y] + beta`.
    MisclassificationPlusBase { beta: f64 },
    /// Arbitrary cost table with declared bounds.
    Table,
}

/// A fixed expert: a class prediction per point and a cost per (point, true class).
#[derive(Clone, Debug, PartialEq)]
pub struct Expert {
    kind: CostKind,
    predictions: Vec<usize>,
    costs: Vec<f64>,
    classes: usize,
    lower: f64,
    upper: f64,
    scale: f64,
}

impl Expert {
    /// Expert whose cost is its own misclassification indicator.
    pub fn misclassification(predictions: Vec<usize>, classes: usize) -> Result<Self> {
        Self::with_kind(CostKind::Misclassification, predictions, classes)
    }

    /// Expert charging its misclassification indicator plus a base cost `beta >= 0`.
    pub fn with_base_cost(predictions: Vec<usize>, classes: usize, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidPanel(format!("base cost {beta} must be >= 0")));
        }
        Self::with_kind(
            CostKind::MisclassificationPlusBase { beta },
            predictions,
            classes,
        )
    }

    /// Expert given by the kind token used in instance documents.
    pub fn with_kind(kind: CostKind, predictions: Vec<usize>, classes: usize) -> Result<Self> {
        let beta = match kind {
            CostKind::Misclassification => 0.0,
            CostKind::MisclassificationPlusBase { beta } => beta,
            CostKind::Table => {
                return Err(Error::InvalidPanel(
                    "table experts are built with Expert::from_table".to_string(),
                ))
            }
        };
        check_predictions(&predictions, classes)?;
        let mut costs = Vec::with_capacity(predictions.len() * classes);
        for &g in &predictions {
            for y in 0..classes {
                costs.push(if g == y { beta } else { 1.0 + beta });
            }
        }
        Ok(Self {
            kind,
            predictions,
            costs,
            classes,
            lower: beta,
            upper: 1.0 + beta,
            scale: 1.0,
        })
    }

    /// Expert with an explicit cost table (`points x classes`, row-major) and declared bounds.
    pub fn from_table(
        predictions: Vec<usize>,
        classes: usize,
        costs: Vec<f64>,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        check_predictions(&predictions, classes)?;
        if costs.len() != predictions.len() * classes {
            return Err(Error::InvalidPanel(format!(
                "cost table has {} entries, expected {}",
                costs.len(),
                predictions.len() * classes
            )));
        }
        if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower <= upper) {
            return Err(Error::InvalidPanel(format!(
                "bounds [{lower}, {upper}] must satisfy 0 <= lower <= upper"
            )));
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPanel(format!("non-finite cost {c}")));
        }
        Ok(Self {
            kind: CostKind::Table,
            predictions,
            costs,
            classes,
            lower,
            upper,
            scale: 1.0,
        })
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    /// Class predicted at point index `point`.
    pub fn prediction(&self, point: usize) -> usize {
        self.predictions[point]
    }

    pub fn predictions(&self) -> &[usize] {
        &self.predictions
    }

    /// Cost of deferring at `point` when the true class is `y`.
    pub fn cost(&self, point: usize, y: usize) -> f64 {
        self.costs[point * self.classes + y]
    }

    /// Declared lower bound on the cost.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Declared upper bound on the cost.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Multiplicative factor applied to the raw costs (1 unless rescaled).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            kind: self.kind,
            predictions: self.predictions.clone(),
            costs: self.costs.iter().map(|c| c * factor).collect(),
            classes: self.classes,
            lower: self.lower * factor,
            upper: self.upper * factor,
            scale: self.scale * factor,
        }
    }

    fn observed_max(&self) -> f64 {
        self.costs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_predictions(predictions: &[usize], classes: usize) -> Result<()> {
    match predictions.iter().find(|&&g| g >= classes) {
        Some(g) => Err(Error::InvalidPanel(format!(
            "expert predicts class {g}, but only {classes} classes exist"
        ))),
        None => Ok(()),
    }
}

/// The `n_e` experts of a label space, all defined on the same point set.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpertPanel {
    space: LabelSpace,
    points: usize,
    experts: Vec<Expert>,
}

impl ExpertPanel {
    /// Builds a panel; the number of experts must match `space`.
    pub fn new(space: LabelSpace, experts: Vec<Expert>) -> Result<Self> {
        if experts.len() != space.experts() {
            return Err(Error::InvalidPanel(format!(
                "label space declares {} experts, panel has {}",
                space.experts(),
                experts.len()
            )));
        }
        let points = experts[0].predictions.len();
        for (j, e) in experts.iter().enumerate() {
            if e.classes != space.classes() {
                return Err(Error::InvalidPanel(format!(
                    "expert {j} covers {} classes, expected {}",
                    e.classes,
                    space.classes()
                )));
            }
            if e.predictions.len() != points {
                return Err(Error::InvalidPanel(format!(
                    "expert {j} covers {} points, expert 0 covers {points}",
                    e.predictions.len()
                )));
            }
        }
        Ok(Self {
            space,
            points,
            experts,
        })
    }

    pub fn space(&self) -> LabelSpace {
        self.space
    }

    /// Number of points the experts are defined on.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    /// Cost of expert `j` at `point` for true class `y`.
    pub fn cost(&self, j: usize, point: usize, y: usize) -> f64 {
        self.experts[j].cost(point, y)
    }

    /// The vector `(c_1(x, y), ..., c_{n_e}(x, y))`.
    pub fn costs_at(&self, point: usize, y: usize) -> Vec<f64> {
        self.experts.iter().map(|e| e.cost(point, y)).collect()
    }

    /// Rescales every cost by `1 / max_j upper_j` when some upper bound exceeds 1.
    ///
    /// The result has all declared bounds inside `[0, 1]`.
    pub fn normalized(&self) -> Self {
        let top = self.experts.iter().map(|e| e.upper).fold(0.0, f64::max);
        if top <= 1.0 {
            return self.clone();
        }
        Self {
            space: self.space,
            points: self.points,
            experts: self.experts.iter().map(|e| e.scaled(1.0 / top)).collect(),
        }
    }

    /// Fails with a cost-mode error unless every declared bound lies in `[0, 1]`.
    pub fn check_unit_costs(&self) -> Result<()> {
        for (j, e) in self.experts.iter().enumerate() {
            if e.lower < 0.0 || e.upper > 1.0 {
                return Err(Error::CostMode(format!(
                    "expert {j} declares costs in [{}, {}]; bound verification needs [0, 1] \
                     (normalize the panel first)",
                    e.lower, e.upper
                )));
            }
        }
        Ok(())
    }

    /// Checks every cost against its expert's declared bounds.
    pub fn check_bounds(&self) -> Result<()> {
        for (j, e) in self.experts.iter().enumerate() {
            for point in 0..self.points {
                for y in 0..self.space.classes() {
                    check_cost(e, j, point, y)?;
                }
            }
        }
        Ok(())
    }

    /// Per-expert bounds `(lower, upper)`: the declared lower bound and the
    /// declared upper bound clamped at the largest cost actually charged.
    pub fn effective_bounds(&self) -> Vec<(f64, f64)> {
        self.experts
            .iter()
            .map(|e| (e.lower, e.upper.min(e.observed_max()).max(e.lower)))
            .collect()
    }
}

pub(crate) fn check_cost(e: &Expert, j: usize, point: usize, y: usize) -> Result<f64> {
    let c = e.cost(point, y);
    let slack = 1e-12;
    if c < e.lower - slack || c > e.upper + slack {
        return Err(Error::CostBound {
            expert: j,
            point,
            label: y,
            cost: c,
            lower: e.lower,
            upper: e.upper,
        });
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misclassification_costs_are_indicators() {
        let e = Expert::misclassification(vec![0, 2], 3).unwrap();
        assert_eq!(e.cost(0, 0), 0.0);
        assert_eq!(e.cost(0, 1), 1.0);
        assert_eq!(e.cost(1, 2), 0.0);
        assert_eq!((e.lower(), e.upper()), (0.0, 1.0));
    }

    #[test]
    fn base_cost_panel_normalizes_into_unit_interval() {
        let space = LabelSpace::new(2, 2).unwrap();
        let panel = ExpertPanel::new(
            space,
            vec![
                Expert::with_base_cost(vec![0, 1], 2, 0.25).unwrap(),
                Expert::with_base_cost(vec![1, 1], 2, 0.0).unwrap(),
            ],
        )
        .unwrap();
        assert!(panel.check_unit_costs().is_err());
        let unit = panel.normalized();
        unit.check_unit_costs().unwrap();
        unit.check_bounds().unwrap();
        assert_eq!(unit.cost(0, 0, 1), 1.0);
        assert_eq!(unit.cost(0, 0, 0), 0.25 / 1.25);
        assert_eq!(unit.experts()[1].scale(), 1.0 / 1.25);
    }

    #[test]
    fn effective_upper_bound_clamps_to_observed_max() {
        let space = LabelSpace::new(2, 1).unwrap();
        let panel = ExpertPanel::new(
            space,
            vec![Expert::from_table(vec![0], 2, vec![0.2, 0.5], 0.0, 1.0).unwrap()],
        )
        .unwrap();
        assert_eq!(panel.effective_bounds(), vec![(0.0, 0.5)]);
    }

    #[test]
    fn panel_rejects_mismatched_experts() {
        let space = LabelSpace::new(2, 2).unwrap();
        let e = Expert::misclassification(vec![0], 2).unwrap();
        assert!(ExpertPanel::new(space, vec![e.clone()]).is_err());
        assert!(Expert::misclassification(vec![2], 2).is_err());
        let other = Expert::misclassification(vec![0, 1], 2).unwrap();
        assert!(ExpertPanel::new(space, vec![e, other]).is_err());
    }
}
