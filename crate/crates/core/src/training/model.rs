use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::ConstraintScope;

/// Score-model architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// `s = W x + b`.
    Linear,
    /// `s = W2 relu(W1 x + b1) + b2`.
    Mlp2,
}

/// Parametric map from features to `n + n_e` scores, with flat parameters.
///
/// Layout: linear stores `W` (output x input, row-major) then `b`; the
/// two-layer network stores `W1`, `b1`, `W2`, `b2` in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub architecture: Architecture,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub weights: Vec<f64>,
}

/// Hidden activations kept between the forward and backward passes.
#[derive(Clone, Debug, Default)]
pub struct Activations {
    hidden: Vec<f64>,
}

impl ScoreModel {
    /// Number of parameters of an architecture.
    pub fn parameter_count(architecture: Architecture, input: usize, hidden: usize, output: usize) -> usize {
        match architecture {
            Architecture::Linear => output * (input + 1),
            Architecture::Mlp2 => hidden * (input + 1) + output * (hidden + 1),
        }
    }

    /// Model with every parameter equal to zero.
    pub fn zeros(architecture: Architecture, input: usize, hidden: usize, output: usize) -> Result<Self> {
        if input == 0 || output == 0 || (architecture == Architecture::Mlp2 && hidden == 0) {
            return Err(Error::Config(format!(
                "model dimensions must be positive (input {input}, hidden {hidden}, output {output})"
            )));
        }
        let hidden = if architecture == Architecture::Linear { 0 } else { hidden };
        Ok(Self {
            architecture,
            input_dim: input,
            hidden_dim: hidden,
            output_dim: output,
            weights: vec![0.0; Self::parameter_count(architecture, input, hidden, output)],
        })
    }

    /// Parameters drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    pub fn new<R: Rng>(
        architecture: Architecture,
        input: usize,
        hidden: usize,
        output: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut model = Self::zeros(architecture, input, hidden, output)?;
        let layers = model.layers();
        for (range, fan_in) in layers {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for w in &mut model.weights[range] {
                *w = rng.random_range(-bound..=bound);
            }
        }
        Ok(model)
    }

    /// Parameter ranges of each layer (weights and bias together) with their fan-in.
    fn layers(&self) -> Vec<(std::ops::Range<usize>, usize)> {
        match self.architecture {
            Architecture::Linear => vec![(0..self.weights.len(), self.input_dim)],
            Architecture::Mlp2 => {
                let first = self.hidden_dim * (self.input_dim + 1);
                vec![(0..first, self.input_dim), (first..self.weights.len(), self.hidden_dim)]
            }
        }
    }

    /// Offset of the output layer and its fan-in.
    fn output_layer(&self) -> (usize, usize) {
        match self.architecture {
            Architecture::Linear => (0, self.input_dim),
            Architecture::Mlp2 => (self.hidden_dim * (self.input_dim + 1), self.hidden_dim),
        }
    }

    fn check_input(&self, x: &[f64]) {
        assert_eq!(x.len(), self.input_dim, "feature vector has the wrong length");
    }

    /// Scores of one feature vector.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cache = Activations::default();
        let mut out = vec![0.0; self.output_dim];
        self.forward_into(x, &mut cache, &mut out);
        out
    }

    /// Forward pass writing scores into `out` and hidden activations into `cache`.
    pub fn forward_into(&self, x: &[f64], cache: &mut Activations, out: &mut [f64]) {
        self.check_input(x);
        let (offset, fan_in) = self.output_layer();
        let inputs: &[f64] = match self.architecture {
            Architecture::Linear => x,
            Architecture::Mlp2 => {
                let (d, h) = (self.input_dim, self.hidden_dim);
                cache.hidden.clear();
                cache.hidden.resize(h, 0.0);
                let w1 = &self.weights[..h * d];
                let b1 = &self.weights[h * d..h * (d + 1)];
                for i in 0..h {
                    let row = &w1[i * d..(i + 1) * d];
                    let z = b1[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                    cache.hidden[i] = z.max(0.0);
                }
                &cache.hidden
            }
        };
        let k = self.output_dim;
        let w = &self.weights[offset..offset + k * fan_in];
        let b = &self.weights[offset + k * fan_in..offset + k * (fan_in + 1)];
        for o in 0..k {
            let row = &w[o * fan_in..(o + 1) * fan_in];
            out[o] = b[o] + row.iter().zip(inputs).map(|(a, c)| a * c).sum::<f64>();
        }
    }

    /// Adds the parameter gradient for `grad_out = dL/ds` into `grad`.
    ///
    /// `cache` must come from [`ScoreModel::forward_into`] on the same `x`.
    pub fn backward(&self, x: &[f64], cache: &Activations, grad_out: &[f64], grad: &mut [f64]) {
        self.check_input(x);
        let (offset, fan_in) = self.output_layer();
        let k = self.output_dim;
        let inputs: &[f64] = match self.architecture {
            Architecture::Linear => x,
            Architecture::Mlp2 => &cache.hidden,
        };
        for o in 0..k {
            let g = grad_out[o];
            if g == 0.0 {
                continue;
            }
            let row = &mut grad[offset + o * fan_in..offset + (o + 1) * fan_in];
            for (r, v) in row.iter_mut().zip(inputs) {
                *r += g * v;
            }
            grad[offset + k * fan_in + o] += g;
        }
        if self.architecture == Architecture::Mlp2 {
            let (d, h) = (self.input_dim, self.hidden_dim);
            let w2 = &self.weights[offset..offset + k * h];
            for i in 0..h {
                if cache.hidden[i] <= 0.0 {
                    continue;
                }
                let gh: f64 = (0..k).map(|o| grad_out[o] * w2[o * h + i]).sum();
                if gh == 0.0 {
                    continue;
                }
                let row = &mut grad[i * d..(i + 1) * d];
                for (r, v) in row.iter_mut().zip(x) {
                    *r += gh * v;
                }
                grad[h * d + i] += gh;
            }
        }
    }

    /// Makes the scoped outputs sum to zero for every input by centering the output layer.
    pub fn project_outputs(&mut self, scope: ConstraintScope, classes: usize) {
        let (offset, fan_in) = self.output_layer();
        let k = self.output_dim;
        let count = match scope {
            ConstraintScope::Augmented => k,
            ConstraintScope::ClassesOnly => classes.min(k),
        };
        for c in 0..=fan_in {
            let index = |o: usize| {
                if c < fan_in {
                    offset + o * fan_in + c
                } else {
                    offset + k * fan_in + o
                }
            };
            let mean = (0..count).map(|o| self.weights[index(o)]).sum::<f64>() / count as f64;
            for o in 0..count {
                self.weights[index(o)] -= mean;
            }
        }
    }

    /// Euclidean norm of the parameters.
    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Rescales the parameters onto the ball of the given radius when outside it.
    pub fn clip_norm(&mut self, radius: f64) {
        let norm = self.norm();
        if norm > radius {
            let factor = if norm > 0.0 { radius / norm } else { 0.0 };
            self.weights.iter_mut().for_each(|w| *w *= factor);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        let expected =
            Self::parameter_count(model.architecture, model.input_dim, model.hidden_dim, model.output_dim);
        if model.weights.len() != expected {
            return Err(Error::Config(format!(
                "model has {} weights, architecture needs {expected}",
                model.weights.len()
            )));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn objective(model: &ScoreModel, x: &[f64], dir: &[f64]) -> f64 {
        model.forward(x).iter().zip(dir).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for arch in [Architecture::Linear, Architecture::Mlp2] {
            let model = ScoreModel::new(arch, 3, 6, 4, &mut rng).unwrap();
            let x = [0.3, -1.1, 0.8];
            let dir = [0.5, -1.0, 2.0, 0.25];
            let mut cache = Activations::default();
            let mut out = vec![0.0; 4];
            model.forward_into(&x, &mut cache, &mut out);
            let mut grad = vec![0.0; model.weights.len()];
            model.backward(&x, &cache, &dir, &mut grad);
            for (i, &g) in grad.iter().enumerate() {
                let h = 1e-6;
                let mut plus = model.clone();
                plus.weights[i] += h;
                let mut minus = model.clone();
                minus.weights[i] -= h;
                let fd = (objective(&plus, &x, &dir) - objective(&minus, &x, &dir)) / (2.0 * h);
                assert!((fd - g).abs() < 1e-6 * (1.0 + fd.abs()), "{arch:?} {i}: {fd} vs {g}");
            }
        }
    }

    #[test]
    fn initialization_respects_fan_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = ScoreModel::new(Architecture::Mlp2, 4, 16, 3, &mut rng).unwrap();
        let first = 16 * 5;
        assert!(model.weights[..first].iter().all(|w| w.abs() <= 0.5));
        assert!(model.weights[first..].iter().all(|w| w.abs() <= 0.25));
        assert_eq!(model.weights.len(), ScoreModel::parameter_count(Architecture::Mlp2, 4, 16, 3));
    }

    #[test]
    fn output_projection_zeroes_score_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = ScoreModel::new(Architecture::Mlp2, 2, 8, 5, &mut rng).unwrap();
        model.project_outputs(ConstraintScope::Augmented, 3);
        let s = model.forward(&[0.7, -0.2]);
        assert!(s.iter().sum::<f64>().abs() < 1e-12);
        let mut model = ScoreModel::new(Architecture::Linear, 2, 0, 5, &mut rng).unwrap();
        model.project_outputs(ConstraintScope::ClassesOnly, 3);
        let s = model.forward(&[1.5, 2.0]);
        assert!(s[..3].iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = ScoreModel::new(Architecture::Linear, 2, 0, 3, &mut rng).unwrap();
        let back = ScoreModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let mut broken = model.clone();
        broken.weights.pop();
        assert!(ScoreModel::from_json(&broken.to_json().unwrap()).is_err());
    }
}
