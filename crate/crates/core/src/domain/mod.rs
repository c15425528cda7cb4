//! Label spaces, experts, finite distributions and the q-vector construction.
//!
//! Labels are 0-based throughout the crate: classes occupy `0..n` and the
//! deferral label of expert `j` (0-based) is `n + j`.

mod distribution;
mod experts;
mod instance;
mod qvector;

pub use distribution::{FiniteDistribution, Point};
pub use experts::{CostKind, Expert, ExpertPanel};
pub use instance::{ExpertRecord, InstanceDocument, PointRecord};
pub use qvector::{build_q_vector, QVector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of classes and experts; the augmented label set has `n + n_e` entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSpace {
    classes: usize,
    experts: usize,
}

impl LabelSpace {
    /// Builds a label space with `classes >= 2` and `experts >= 1`.
    pub fn new(classes: usize, experts: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidLabelSpace(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if experts < 1 {
            return Err(Error::InvalidLabelSpace(
                "need at least 1 expert".to_string(),
            ));
        }
        Ok(Self { classes, experts })
    }

    /// Number of classes `n`.
    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Number of experts `n_e`.
    pub fn experts(&self) -> usize {
        self.experts
    }

    /// Size of the augmented label set, `n + n_e`.
    pub fn size(&self) -> usize {
        self.classes + self.experts
    }

    /// Augmented label of expert `j`.
    pub fn expert_label(&self, j: usize) -> usize {
        self.classes + j
    }

    /// Interprets an augmented label as a decision.
    pub fn decision(&self, label: usize) -> Result<Decision> {
        if label < self.classes {
            Ok(Decision::Predict(label))
        } else if label < self.size() {
            Ok(Decision::Defer(label - self.classes))
        } else {
            Err(Error::InvalidLabel {
                label,
                bound: self.size(),
            })
        }
    }

    /// Checks that `y` is a class label.
    pub fn check_class(&self, y: usize) -> Result<()> {
        if y < self.classes {
            Ok(())
        } else {
            Err(Error::InvalidLabel {
                label: y,
                bound: self.classes,
            })
        }
    }

    /// Checks that a score vector has the augmented length and finite entries.
    pub fn check_scores(&self, scores: &[f64]) -> Result<()> {
        if scores.len() != self.size() {
            return Err(Error::ScoreLength {
                expected: self.size(),
                found: scores.len(),
            });
        }
        check_finite(scores)
    }
}

/// What the system does at an input: predict a class or hand off to an expert.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Predict(usize),
    Defer(usize),
}

pub(crate) fn check_finite(scores: &[f64]) -> Result<()> {
    match scores.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::InvalidScore {
            index,
            value: scores[index],
        }),
        None => Ok(()),
    }
}

/// Index of the largest score; ties go to the smallest index.
pub fn predict_label(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::ScoreLength {
            expected: 1,
            found: 0,
        });
    }
    check_finite(scores)?;
    Ok(argmax(scores))
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Hypothesis classes whose argmax reachability can be queried.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelClass {
    /// Every measurable score function.
    AllMeasurable,
    /// Score functions with every coordinate in `[-lambda, lambda]`.
    BoundedScores { lambda: f64 },
    /// Linear scores with free bias; `radius` bounds the parameter norm.
    Linear { radius: Option<f64> },
    /// Two-layer rectifier network; `radius` bounds the parameter norm.
    Mlp2 { radius: Option<f64> },
}

/// Augmented labels attainable as the argmax of some hypothesis in `class`.
///
/// The answer does not depend on the input for the shipped classes. A class
/// collapsed to the zero function (`lambda = 0` or `radius = 0`) only reaches
/// label 0 through the tie-break rule.
pub fn reachable_labels(space: LabelSpace, class: &ModelClass) -> Vec<usize> {
    let collapsed = match class {
        ModelClass::AllMeasurable => false,
        ModelClass::BoundedScores { lambda } => *lambda <= 0.0,
        ModelClass::Linear { radius } | ModelClass::Mlp2 { radius } => {
            radius.is_some_and(|r| r <= 0.0)
        }
    };
    if collapsed {
        vec![0]
    } else {
        (0..space.size()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_space_rejects_degenerate_sizes() {
        assert!(LabelSpace::new(1, 1).is_err());
        assert!(LabelSpace::new(2, 0).is_err());
        let space = LabelSpace::new(3, 2).unwrap();
        assert_eq!(space.size(), 5);
        assert_eq!(space.expert_label(1), 4);
        assert_eq!(space.decision(3).unwrap(), Decision::Defer(0));
        assert_eq!(space.decision(2).unwrap(), Decision::Predict(2));
        assert!(space.decision(5).is_err());
    }

    #[test]
    fn predict_label_examples() {
        assert_eq!(predict_label(&[0.1, 0.5, 0.2, 0.9, 0.3]).unwrap(), 3);
        assert_eq!(predict_label(&[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap(), 0);
        assert_eq!(predict_label(&[0.0; 5]).unwrap(), 0);
        assert!(matches!(
            predict_label(&[0.0, f64::NAN]),
            Err(Error::InvalidScore { index: 1, .. })
        ));
        assert!(predict_label(&[0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn reachable_labels_cover_augmented_set() {
        let space = LabelSpace::new(3, 2).unwrap();
        let full: Vec<usize> = (0..5).collect();
        assert_eq!(reachable_labels(space, &ModelClass::Linear { radius: None }), full);
        assert_eq!(
            reachable_labels(space, &ModelClass::BoundedScores { lambda: 0.5 }),
            full
        );
        assert_eq!(reachable_labels(space, &ModelClass::Mlp2 { radius: Some(3.0) }), full);
        assert_eq!(reachable_labels(space, &ModelClass::Linear { radius: Some(0.0) }), vec![0]);
    }
}
