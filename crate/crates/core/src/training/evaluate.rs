use serde::{Deserialize, Serialize};

use super::{Dataset, ScoreModel};
use crate::domain::{argmax, Decision};

/// System-level metrics of a trained router on a labeled set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemEvaluation {
    /// Fraction of examples whose final decision equals the label.
    pub system_accuracy: f64,
    /// Fraction routed to the predictor (entry 0) and to each expert.
    pub deferral_ratios: Vec<f64>,
    /// Per true class: fraction routed to the predictor and to each expert.
    pub per_class_routing: Vec<Vec<f64>>,
    /// Per true class: fraction the predictor keeps and classifies correctly.
    pub per_class_correct_prediction: Vec<f64>,
    /// Per true class: system accuracy.
    pub per_class_accuracy: Vec<f64>,
    /// Number of examples per true class.
    pub class_counts: Vec<usize>,
    /// Mean deferral loss under the dataset's costs.
    pub deferral_loss: f64,
}

/// Routes every example with the model and scores the resulting decisions.
pub fn evaluate_system(model: &ScoreModel, test: &Dataset) -> SystemEvaluation {
    let space = test.space;
    let options = space.experts() + 1;
    let mut correct = 0usize;
    let mut routed = vec![0usize; options];
    let mut by_class = vec![vec![0usize; options]; space.classes()];
    let mut kept_correct = vec![0usize; space.classes()];
    let mut class_correct = vec![0usize; space.classes()];
    let mut counts = vec![0usize; space.classes()];
    let mut loss = 0.0;
    for s in &test.samples {
        let scores = model.forward(&s.features);
        let (option, answer, cost) = match space.decision(argmax(&scores)).expect("argmax is in range") {
            Decision::Predict(c) => (0, c, if c == s.label { 0.0 } else { 1.0 }),
            Decision::Defer(j) => (j + 1, s.expert_predictions[j], s.costs[j]),
        };
        loss += cost;
        routed[option] += 1;
        by_class[s.label][option] += 1;
        counts[s.label] += 1;
        if answer == s.label {
            correct += 1;
            class_correct[s.label] += 1;
            if option == 0 {
                kept_correct[s.label] += 1;
            }
        }
    }
    let total = test.len().max(1) as f64;
    let per_class_routing = by_class
        .iter()
        .zip(&counts)
        .map(|(row, &c)| row.iter().map(|&v| v as f64 / c.max(1) as f64).collect())
        .collect();
    SystemEvaluation {
        system_accuracy: correct as f64 / total,
        deferral_ratios: routed.iter().map(|&v| v as f64 / total).collect(),
        per_class_routing,
        per_class_correct_prediction: kept_correct
            .iter()
            .zip(&counts)
            .map(|(&k, &c)| k as f64 / c.max(1) as f64)
            .collect(),
        per_class_accuracy: class_correct
            .iter()
            .zip(&counts)
            .map(|(&k, &c)| k as f64 / c.max(1) as f64)
            .collect(),
        class_counts: counts,
        deferral_loss: loss / total,
    }
}

/// Accuracy of the argmax over class scores only, ignoring the deferral outputs.
pub fn classifier_accuracy(model: &ScoreModel, test: &Dataset) -> f64 {
    let n = test.space.classes();
    let correct = test
        .samples
        .iter()
        .filter(|s| argmax(&model.forward(&s.features)[..n]) == s.label)
        .count();
    correct as f64 / test.len().max(1) as f64
}
