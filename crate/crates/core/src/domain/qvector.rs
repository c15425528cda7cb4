use super::experts::check_cost;
use super::{ExpertPanel, FiniteDistribution};
use crate::error::{Error, Result};

/// Class conditionals extended with the cost-complement mass of each expert.
#[derive(Clone, Debug, PartialEq)]
pub struct QVector {
    /// `q(y) = p(x, y)` for classes, `q(n + j) = 1 - E_y[c_j(x, y)]` for experts.
    pub q: Vec<f64>,
    /// `Q = sum_y q(y)`.
    pub total: f64,
    /// `q / Q`.
    pub normalized: Vec<f64>,
}

impl QVector {
    /// Builds the vector from class conditionals and expected expert costs.
    ///
    /// Entries within round-off of zero (expected cost `1 + 1e-12` or less) are set to zero.
    pub fn from_parts(conditional: &[f64], expected_costs: &[f64]) -> Self {
        let complements: Vec<f64> = expected_costs.iter().map(|c| 1.0 - c).collect();
        Self::from_complements(conditional, &complements)
    }

    /// Builds the vector from class conditionals and `E_y[1 - c_j(x, y)]` per expert.
    ///
    /// Summing the complements directly avoids the cancellation in `1 - E[c]`
    /// when the expected cost is close to 1.
    pub fn from_complements(conditional: &[f64], complements: &[f64]) -> Self {
        let mut q = conditional.to_vec();
        q.extend(complements.iter().map(|&v| {
            if v < 0.0 && v > -1e-12 {
                0.0
            } else {
                v
            }
        }));
        let total: f64 = q.iter().sum();
        let normalized = q.iter().map(|v| v / total).collect();
        Self {
            q,
            total,
            normalized,
        }
    }

    /// Largest entry of `q`.
    pub fn max(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// q-vector of the point at index `x`.
pub fn build_q_vector(
    d: &FiniteDistribution,
    panel: &ExpertPanel,
    x: usize,
) -> Result<QVector> {
    let point = d.point(x)?;
    if x >= panel.points() {
        return Err(Error::UnknownPoint(format!(
            "index {x} has no expert predictions"
        )));
    }
    let mut complements = Vec::with_capacity(panel.experts().len());
    for (j, e) in panel.experts().iter().enumerate() {
        let mut acc = 0.0;
        for (y, p) in point.conditional.iter().enumerate() {
            acc += p * (1.0 - check_cost(e, j, x, y)?);
        }
        complements.push(acc);
    }
    Ok(QVector::from_complements(&point.conditional, &complements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Expert, LabelSpace, Point};
    use approx::assert_abs_diff_eq;

    fn single(conditional: Vec<f64>, expert: Expert) -> (FiniteDistribution, ExpertPanel) {
        let d = FiniteDistribution::new(
            2,
            vec![Point {
                id: 0,
                features: vec![],
                weight: 1.0,
                conditional,
            }],
        )
        .unwrap();
        let panel = ExpertPanel::new(LabelSpace::new(2, 1).unwrap(), vec![expert]).unwrap();
        (d, panel)
    }

    #[test]
    fn hand_computed_q_vector() {
        let (d, panel) = single(
            vec![0.7, 0.3],
            Expert::misclassification(vec![0], 2).unwrap(),
        );
        let q = build_q_vector(&d, &panel, 0).unwrap();
        assert_abs_diff_eq!(q.q[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(q.q[1], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(q.q[2], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(q.total, 1.7, epsilon = 1e-15);
    }

    #[test]
    fn useless_and_free_experts() {
        let (d, panel) = single(
            vec![0.4, 0.6],
            Expert::from_table(vec![0], 2, vec![1.0, 1.0], 0.0, 1.0).unwrap(),
        );
        let q = build_q_vector(&d, &panel, 0).unwrap();
        assert_eq!(q.q[2], 0.0);
        assert_abs_diff_eq!(q.total, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.normalized[0], 0.4, epsilon = 1e-15);

        let (d, panel) = single(
            vec![0.4, 0.6],
            Expert::from_table(vec![0], 2, vec![0.0, 0.0], 0.0, 1.0).unwrap(),
        );
        let q = build_q_vector(&d, &panel, 0).unwrap();
        assert_eq!(q.q[2], 1.0);
        assert_abs_diff_eq!(q.total, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn errors_on_unknown_point_and_out_of_bound_cost() {
        let (d, panel) = single(
            vec![0.4, 0.6],
            Expert::from_table(vec![0], 2, vec![0.9, 0.1], 0.0, 0.5).unwrap(),
        );
        assert!(matches!(
            build_q_vector(&d, &panel, 0),
            Err(Error::CostBound { label: 0, .. })
        ));
        assert!(matches!(
            build_q_vector(&d, &panel, 1),
            Err(Error::UnknownPoint(_))
        ));
    }
}
