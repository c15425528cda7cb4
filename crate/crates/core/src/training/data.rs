use serde::{Deserialize, Serialize};

use crate::domain::{ExpertPanel, FiniteDistribution, LabelSpace};
use crate::error::{Error, Result};

/// One labeled example with the experts' precomputed predictions and costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Index of the underlying point in the task's finite distribution.
    pub point: usize,
    pub features: Vec<f64>,
    pub label: usize,
    /// `c_j(x, y)` for every expert.
    pub costs: Vec<f64>,
    /// `g_j(x)` for every expert.
    pub expert_predictions: Vec<usize>,
}

/// Labeled examples over a fixed label space.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub space: LabelSpace,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Examples for the given `(point index, label)` draws.
    pub fn from_draws(
        d: &FiniteDistribution,
        panel: &ExpertPanel,
        draws: &[(usize, usize)],
    ) -> Result<Self> {
        let space = panel.space();
        let mut samples = Vec::with_capacity(draws.len());
        for &(point, label) in draws {
            let p = d.point(point)?;
            space.check_class(label)?;
            samples.push(Sample {
                point,
                features: p.features.clone(),
                label,
                costs: panel.costs_at(point, label),
                expert_predictions: panel.experts().iter().map(|e| e.prediction(point)).collect(),
            });
        }
        Ok(Self { space, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature dimension (0 for an empty set).
    pub fn input_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    /// Copy with every cost set to `value`.
    pub fn with_constant_costs(&self, value: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.costs.iter_mut().for_each(|c| *c = value);
        }
        out
    }

    /// Copy with every cost multiplied by `factor`.
    pub fn with_scaled_costs(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.costs.iter_mut().for_each(|c| *c *= factor);
        }
        out
    }

    /// Largest cost over all examples and experts.
    pub fn max_cost(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.costs.iter().copied())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_nonempty(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Config("dataset is empty".to_string()));
        }
        Ok(())
    }
}
