use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CostKind, Expert, ExpertPanel, FiniteDistribution, LabelSpace, Point};
use crate::error::{Error, Result};

/// One point of a serialized instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: u64,
    pub features: Vec<f64>,
    pub weight: f64,
    pub conditional: Vec<f64>,
}

/// One expert of a serialized instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpertRecord {
    /// `"misclassification"` or `"misclassification_plus_base"`.
    pub kind: String,
    #[serde(default)]
    pub beta: f64,
    /// Predicted class for every point id.
    pub predictions: BTreeMap<u64, usize>,
}

/// JSON form of a finite distribution together with its expert panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub n: usize,
    pub n_e: usize,
    pub points: Vec<PointRecord>,
    pub experts: Vec<ExpertRecord>,
}

impl InstanceDocument {
    /// Captures a distribution and a panel built from misclassification-type experts.
    pub fn from_parts(d: &FiniteDistribution, panel: &ExpertPanel) -> Result<Self> {
        let points = d
            .points()
            .iter()
            .map(|p| PointRecord {
                id: p.id,
                features: p.features.clone(),
                weight: p.weight,
                conditional: p.conditional.clone(),
            })
            .collect();
        let mut experts = Vec::new();
        for e in panel.experts() {
            if e.scale() != 1.0 {
                return Err(Error::Unsupported(
                    "rescaled panels are not serialized; store the raw panel".to_string(),
                ));
            }
            let (kind, beta) = match e.kind() {
                CostKind::Misclassification => ("misclassification", 0.0),
                CostKind::MisclassificationPlusBase { beta } => ("misclassification_plus_base", beta),
                CostKind::Table => {
                    return Err(Error::Unsupported(
                        "table-cost experts have no document form".to_string(),
                    ))
                }
            };
            let predictions = d
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| (p.id, e.prediction(i)))
                .collect();
            experts.push(ExpertRecord {
                kind: kind.to_string(),
                beta,
                predictions,
            });
        }
        Ok(Self {
            n: d.classes(),
            n_e: panel.experts().len(),
            points,
            experts,
        })
    }

    /// Validates the document and builds the label space, distribution and panel.
    pub fn to_parts(&self) -> Result<(LabelSpace, FiniteDistribution, ExpertPanel)> {
        let space = LabelSpace::new(self.n, self.n_e)?;
        let points = self
            .points
            .iter()
            .map(|p| Point {
                id: p.id,
                features: p.features.clone(),
                weight: p.weight,
                conditional: p.conditional.clone(),
            })
            .collect();
        let d = FiniteDistribution::new(self.n, points)?;
        let mut experts = Vec::with_capacity(self.experts.len());
        for (j, record) in self.experts.iter().enumerate() {
            let kind = match record.kind.as_str() {
                "misclassification" => CostKind::Misclassification,
                "misclassification_plus_base" => {
                    CostKind::MisclassificationPlusBase { beta: record.beta }
                }
                other => {
                    return Err(Error::InvalidPanel(format!(
                        "expert {j} has kind `{other}`; expected `misclassification` or \
                         `misclassification_plus_base`"
                    )))
                }
            };
            let mut predictions = Vec::with_capacity(d.len());
            for p in d.points() {
                let label = record.predictions.get(&p.id).ok_or_else(|| {
                    Error::InvalidPanel(format!("expert {j} has no prediction for point {}", p.id))
                })?;
                predictions.push(*label);
            }
            if record.predictions.len() != d.len() {
                return Err(Error::InvalidPanel(format!(
                    "expert {j} predicts on ids outside the point set"
                )));
            }
            let expert = match kind {
                CostKind::MisclassificationPlusBase { beta } => {
                    Expert::with_base_cost(predictions, self.n, beta)?
                }
                _ => Expert::with_kind(kind, predictions, self.n)?,
            };
            experts.push(expert);
        }
        let panel = ExpertPanel::new(space, experts)?;
        Ok((space, d, panel))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
