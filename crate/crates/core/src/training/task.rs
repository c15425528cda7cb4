use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Sample};
use crate::domain::{Expert, ExpertPanel, FiniteDistribution, LabelSpace, Point};
use crate::error::{Error, Result};
use crate::seeding::rng_for;

/// Isotropic Gaussian component attached to one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub class: usize,
    pub mean: Vec<f64>,
    pub scale: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Behaviour of a synthetic expert, which sees the true class of each example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExpertProfile {
    /// Correct with probability `accuracy`, otherwise a uniformly chosen wrong class.
    Accuracy { accuracy: f64 },
    /// Correct with probability `in_domain_accuracy` on its classes, uniform guess over all classes elsewhere.
    Domain {
        domain: Vec<usize>,
        in_domain_accuracy: f64,
    },
}

/// Gaussian-mixture classification task with synthetic experts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub classes: usize,
    pub input_dim: usize,
    pub components: Vec<Component>,
    #[serde(default)]
    pub label_noise: f64,
    pub experts: Vec<ExpertProfile>,
    /// 1: misclassification cost; 2: misclassification plus base cost.
    pub cost_kind: u8,
    #[serde(default)]
    pub betas: Vec<f64>,
    /// Number of points of the finite evaluation distribution.
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
}

fn default_population() -> usize {
    2000
}

fn default_test_size() -> usize {
    2000
}

/// Generated task: exact finite distribution, raw-cost panel and sampled splits.
#[derive(Clone, Debug)]
pub struct Task {
    pub space: LabelSpace,
    pub distribution: FiniteDistribution,
    pub panel: ExpertPanel,
    pub train: Dataset,
    pub test: Dataset,
}

impl SyntheticTaskSpec {
    /// Checks the layout, profiles and cost settings.
    pub fn validate(&self) -> Result<()> {
        LabelSpace::new(self.classes, self.experts.len())?;
        if self.input_dim == 0 {
            return Err(Error::Config("task.input_dim must be positive".to_string()));
        }
        if self.components.is_empty() {
            return Err(Error::Config("task.components is empty".to_string()));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.class >= self.classes {
                return Err(Error::Config(format!(
                    "task.components[{i}].class = {} but only {} classes exist",
                    c.class, self.classes
                )));
            }
            if c.mean.len() != self.input_dim {
                return Err(Error::Config(format!(
                    "task.components[{i}].mean has length {}, expected {}",
                    c.mean.len(),
                    self.input_dim
                )));
            }
            if !(c.scale > 0.0 && c.scale.is_finite()) {
                return Err(Error::Config(format!(
                    "task.components[{i}].scale = {} is degenerate",
                    c.scale
                )));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::Config(format!(
                    "task.components[{i}].weight must be positive"
                )));
            }
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::Config(format!(
                "task.label_noise = {} must lie in [0, 0.5)",
                self.label_noise
            )));
        }
        for (j, p) in self.experts.iter().enumerate() {
            let (acc, domain) = match p {
                ExpertProfile::Accuracy { accuracy } => (*accuracy, &[][..]),
                ExpertProfile::Domain {
                    domain,
                    in_domain_accuracy,
                } => (*in_domain_accuracy, &domain[..]),
            };
            if !(0.0..=1.0).contains(&acc) {
                return Err(Error::Config(format!(
                    "task.experts[{j}] accuracy {acc} must lie in [0, 1]"
                )));
            }
            if let Some(c) = domain.iter().find(|&&c| c >= self.classes) {
                return Err(Error::Config(format!(
                    "task.experts[{j}].domain contains class {c}"
                )));
            }
        }
        match self.cost_kind {
            1 => {}
            2 => {
                if self.betas.len() != self.experts.len() {
                    return Err(Error::Config(format!(
                        "task.betas has {} entries for {} experts",
                        self.betas.len(),
                        self.experts.len()
                    )));
                }
                if self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                    return Err(Error::Config("task.betas must be >= 0".to_string()));
                }
            }
            k => {
                return Err(Error::Config(format!(
                    "task.cost_kind = {k}; expected 1 or 2"
                )))
            }
        }
        if self.population == 0 {
            return Err(Error::Config("task.population must be positive".to_string()));
        }
        Ok(())
    }

    /// Label space of the task.
    pub fn space(&self) -> Result<LabelSpace> {
        LabelSpace::new(self.classes, self.experts.len())
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let d = self.input_dim as f64;
        let mut logs = vec![f64::NEG_INFINITY; self.classes];
        for c in &self.components {
            let dist2: f64 = x.iter().zip(&c.mean).map(|(a, b)| (a - b) * (a - b)).sum();
            let log_density = c.weight.ln() - dist2 / (2.0 * c.scale * c.scale) - d * c.scale.ln();
            let slot = &mut logs[c.class];
            *slot = if slot.is_finite() {
                let m = slot.max(log_density);
                m + ((*slot - m).exp() + (log_density - m).exp()).ln()
            } else {
                log_density
            };
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = p.iter().sum();
        let uniform = 1.0 / self.classes as f64;
        for v in p.iter_mut() {
            *v = (1.0 - self.label_noise) * (*v / z) + self.label_noise * uniform;
        }
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        p
    }

    fn sample_features<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        let mut u = rng.random_range(0.0..total);
        let mut chosen = &self.components[self.components.len() - 1];
        for c in &self.components {
            if u < c.weight {
                chosen = c;
                break;
            }
            u -= c.weight;
        }
        chosen
            .mean
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + chosen.scale * z
            })
            .collect()
    }

    fn accuracy(&self, profile: &ExpertProfile, y: usize) -> f64 {
        match profile {
            ExpertProfile::Accuracy { accuracy } => *accuracy,
            ExpertProfile::Domain {
                domain,
                in_domain_accuracy,
            } => {
                if domain.contains(&y) {
                    *in_domain_accuracy
                } else {
                    1.0 / self.classes as f64
                }
            }
        }
    }

    fn beta(&self, j: usize) -> f64 {
        if self.cost_kind == 2 {
            self.betas[j]
        } else {
            0.0
        }
    }

    /// Random answer of expert `j` when the true class is `y`.
    fn answer<R: Rng>(&self, j: usize, y: usize, rng: &mut R) -> usize {
        let n = self.classes;
        match &self.experts[j] {
            ExpertProfile::Domain { domain, .. } if !domain.contains(&y) => rng.random_range(0..n),
            profile => {
                if rng.random_bool(self.accuracy(profile, y)) {
                    y
                } else {
                    (y + 1 + rng.random_range(0..n - 1)) % n
                }
            }
        }
    }

    /// Builds the finite distribution and the raw-cost expert panel.
    ///
    /// Each expert's cost table holds its expected cost
    /// `P(answer != y) + beta` given the true class `y`, so the panel is a
    /// deterministic function of the population.
    pub fn population(&self, seed: u64) -> Result<(FiniteDistribution, ExpertPanel)> {
        self.validate()?;
        let space = self.space()?;
        let mut rng = rng_for(seed, "population", 0);
        let weight = 1.0 / self.population as f64;
        let mut points = Vec::with_capacity(self.population);
        for i in 0..self.population {
            let features = self.sample_features(&mut rng);
            let conditional = self.posterior(&features);
            points.push(Point {
                id: i as u64,
                features,
                weight,
                conditional,
            });
        }
        let d = FiniteDistribution::new(self.classes, points)?;
        let mut experts = Vec::with_capacity(self.experts.len());
        for (j, profile) in self.experts.iter().enumerate() {
            let beta = self.beta(j);
            let row: Vec<f64> = (0..self.classes)
                .map(|y| 1.0 - self.accuracy(profile, y) + beta)
                .collect();
            let costs: Vec<f64> = (0..self.population).flat_map(|_| row.iter().copied()).collect();
            // Label-blind summary: the class the expert most often answers at each point.
            let predictions = d
                .points()
                .iter()
                .map(|p| {
                    let mut mass = vec![0.0; self.classes];
                    for (y, py) in p.conditional.iter().enumerate() {
                        let acc = self.accuracy(profile, y);
                        let miss = (1.0 - acc) / (self.classes - 1) as f64;
                        for (k, m) in mass.iter_mut().enumerate() {
                            *m += py * if k == y { acc } else { miss };
                        }
                    }
                    crate::domain::argmax(&mass)
                })
                .collect();
            experts.push(Expert::from_table(predictions, self.classes, costs, beta, 1.0 + beta)?);
        }
        Ok((d, ExpertPanel::new(space, experts)?))
    }

    /// Labeled examples for `draws`, with each expert's answer drawn given the true class.
    ///
    /// Costs are the realized `1[answer != y] + beta`; their expectation is the panel's table.
    pub fn sample<R: Rng>(&self, d: &FiniteDistribution, draws: &[(usize, usize)], rng: &mut R) -> Result<Dataset> {
        let space = self.space()?;
        let mut samples = Vec::with_capacity(draws.len());
        for &(point, label) in draws {
            let p = d.point(point)?;
            space.check_class(label)?;
            let answers: Vec<usize> = (0..self.experts.len()).map(|j| self.answer(j, label, rng)).collect();
            samples.push(Sample {
                point,
                features: p.features.clone(),
                label,
                costs: answers
                    .iter()
                    .enumerate()
                    .map(|(j, &a)| if a == label { 0.0 } else { 1.0 } + self.beta(j))
                    .collect(),
                expert_predictions: answers,
            });
        }
        Ok(Dataset { space, samples })
    }
}

/// Draws `(point, label)` pairs i.i.d. from a finite distribution.
pub fn draw<R: Rng>(d: &FiniteDistribution, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let cumulative: Vec<f64> = d
        .points()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p.weight;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap_or(&1.0);
    (0..count)
        .map(|_| {
            let u = rng.random_range(0.0..total);
            let x = cumulative.partition_point(|&c| c <= u).min(d.len() - 1);
            let cond = &d.points()[x].conditional;
            let mut v = rng.random_range(0.0..1.0);
            let mut y = cond.len() - 1;
            for (k, p) in cond.iter().enumerate() {
                if v < *p {
                    y = k;
                    break;
                }
                v -= p;
            }
            (x, y)
        })
        .collect()
}

/// Generates the population, the panel and train/test splits of size `m` and `spec.test_size`.
pub fn generate_task(spec: &SyntheticTaskSpec, m: usize, seed: u64) -> Result<Task> {
    if m == 0 {
        return Err(Error::Config("training sample size must be positive".to_string()));
    }
    let (distribution, panel) = spec.population(seed)?;
    let mut train_rng = rng_for(seed, "train", m as u64);
    let train_draws = draw(&distribution, m, &mut train_rng);
    let train = spec.sample(&distribution, &train_draws, &mut train_rng)?;
    let mut test_rng = rng_for(seed, "test", 0);
    let test_draws = draw(&distribution, spec.test_size.max(1), &mut test_rng);
    let test = spec.sample(&distribution, &test_draws, &mut test_rng)?;
    Ok(Task {
        space: panel.space(),
        train,
        test,
        distribution,
        panel,
    })
}
