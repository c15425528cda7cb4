use serde::{Deserialize, Serialize};

use super::SurrogateSpec;
use crate::domain::LabelSpace;

/// Functional form of a transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaShape {
    /// `Gamma(t) = c * t`.
    Linear,
    /// `Gamma(t) = sqrt(c * t)`.
    Sqrt,
}

/// Concave transform relating surrogate and deferral estimation errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaTransform {
    pub shape: GammaShape,
    pub coefficient: f64,
}

impl GammaTransform {
    /// Evaluates the transform; negative arguments are treated as zero.
    pub fn apply(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.shape {
            GammaShape::Linear => self.coefficient * t,
            GammaShape::Sqrt => (self.coefficient * t).sqrt(),
        }
    }

    /// Linear transforms let the cost constants drop out of the bound.
    pub fn removes_constants(&self) -> bool {
        self.shape == GammaShape::Linear
    }

    /// Right-hand side `(n_e + 1 - sum lower) * Gamma(eps / (n_e + 1 - sum upper))`.
    pub fn bound_with_constants(&self, eps: f64, experts: usize, sum_lower: f64, sum_upper: f64) -> f64 {
        let outer = experts as f64 + 1.0 - sum_lower;
        let inner = experts as f64 + 1.0 - sum_upper;
        outer * self.apply(eps / inner)
    }

    /// Right-hand side used by the theorem: constants dropped for linear transforms.
    pub fn bound(&self, eps: f64, experts: usize, sum_lower: f64, sum_upper: f64) -> f64 {
        if self.removes_constants() {
            self.apply(eps)
        } else {
            self.bound_with_constants(eps, experts, sum_lower, sum_upper)
        }
    }

    /// Bound for costs spanning `[0, 1]`: `(n_e + 1) * Gamma(eps)`, or `Gamma(eps)` when linear.
    pub fn simplified_bound(&self, eps: f64, experts: usize) -> f64 {
        self.bound(eps, experts, 0.0, experts as f64)
    }
}

/// Transform associated with a base loss on the augmented problem.
///
/// Class-count dependent coefficients use the augmented size `n + n_e`,
/// the number of labels the base loss actually ranges over.
pub fn gamma_of(spec: &SurrogateSpec, space: LabelSpace) -> GammaTransform {
    let k = space.size() as f64;
    let (shape, coefficient) = match *spec {
        SurrogateSpec::CompSumExp | SurrogateSpec::CompSumLog => (GammaShape::Sqrt, 2.0),
        SurrogateSpec::CompSumGce { alpha } => (GammaShape::Sqrt, 2.0 * k.powf(alpha)),
        SurrogateSpec::CompSumMae => (GammaShape::Linear, k),
        SurrogateSpec::SumSq => (GammaShape::Sqrt, 1.0),
        SurrogateSpec::SumExp => (GammaShape::Sqrt, 2.0),
        SurrogateSpec::SumRho { .. } => (GammaShape::Linear, 1.0),
        SurrogateSpec::ConstrainedHinge => (GammaShape::Linear, 1.0),
        SurrogateSpec::ConstrainedSq => (GammaShape::Sqrt, 1.0),
        SurrogateSpec::ConstrainedExp => (GammaShape::Sqrt, 2.0),
        SurrogateSpec::ConstrainedRho { .. } => (GammaShape::Linear, 1.0),
    };
    GammaTransform { shape, coefficient }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_bound_simplifies_to_three_root_two() {
        let space = LabelSpace::new(10, 2).unwrap();
        let g = gamma_of(&SurrogateSpec::CompSumLog, space);
        assert_eq!(g.shape, GammaShape::Sqrt);
        let eps = 0.01;
        assert_abs_diff_eq!(
            g.simplified_bound(eps, 2),
            3.0 * 2f64.sqrt() * eps.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn linear_transforms_drop_constants() {
        let space = LabelSpace::new(10, 2).unwrap();
        let mae = gamma_of(&SurrogateSpec::CompSumMae, space);
        assert!(mae.removes_constants());
        assert_abs_diff_eq!(mae.simplified_bound(0.5, 2), 12.0 * 0.5, epsilon = 1e-15);
        let hinge = gamma_of(&SurrogateSpec::ConstrainedHinge, space);
        assert_abs_diff_eq!(hinge.bound(0.3, 2, 0.4, 1.2), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(
            hinge.bound_with_constants(0.3, 2, 0.4, 1.2),
            2.6 * 0.3 / 1.8,
            epsilon = 1e-15
        );
    }

    #[test]
    fn transforms_vanish_at_zero_and_are_monotone() {
        let space = LabelSpace::new(4, 3).unwrap();
        for spec in SurrogateSpec::all() {
            let g = gamma_of(&spec, space);
            assert_eq!(g.apply(0.0), 0.0);
            assert_eq!(g.apply(-1.0), 0.0);
            let mut last = 0.0;
            for i in 1..50 {
                let v = g.apply(i as f64 * 0.1);
                assert!(v >= last);
                last = v;
            }
        }
    }
}
