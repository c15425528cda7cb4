use std::collections::HashMap;

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// One input of a finite distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    /// Stable identifier used by serialized documents.
    pub id: u64,
    /// Feature vector fed to score models.
    pub features: Vec<f64>,
    /// Marginal probability of the point.
    pub weight: f64,
    /// Conditional class distribution `p(x, .)`.
    pub conditional: Vec<f64>,
}

/// A distribution over finitely many inputs with exact class conditionals.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    classes: usize,
    points: Vec<Point>,
    index: HashMap<u64, usize>,
}

impl FiniteDistribution {
    /// Validates weights, conditionals and identifiers.
    pub fn new(classes: usize, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("no points".to_string()));
        }
        let mut index = HashMap::with_capacity(points.len());
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.id, i).is_some() {
                return Err(Error::InvalidDistribution(format!("duplicate id {}", p.id)));
            }
            if !(p.weight.is_finite() && p.weight >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "point {} has weight {}",
                    p.id, p.weight
                )));
            }
            total += p.weight;
            if p.conditional.len() != classes {
                return Err(Error::InvalidDistribution(format!(
                    "point {} has {} conditional entries, expected {classes}",
                    p.id,
                    p.conditional.len()
                )));
            }
            if p.conditional.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidDistribution(format!(
                    "point {} has a negative or non-finite conditional",
                    p.id
                )));
            }
            let mass: f64 = p.conditional.iter().sum();
            if (mass - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidDistribution(format!(
                    "conditional of point {} sums to {mass}",
                    p.id
                )));
            }
            if p.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "point {} has non-finite features",
                    p.id
                )));
            }
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "marginal weights sum to {total}"
            )));
        }
        Ok(Self {
            classes,
            points,
            index,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Result<&Point> {
        self.points
            .get(index)
            .ok_or_else(|| Error::UnknownPoint(format!("index {index}")))
    }

    /// Position of the point with identifier `id`.
    pub fn index_of(&self, id: u64) -> Result<usize> {
        self.index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::UnknownPoint(format!("id {id}")))
    }
}
