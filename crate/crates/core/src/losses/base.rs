//! Base multiclass losses over the augmented label set and their gradients.

use super::SurrogateSpec;

/// Exponents are clamped to this magnitude before exponentiation.
pub const EXP_CLAMP: f64 = 30.0;

/// Value of a base loss plus whether an exponent hit the clamp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub saturated: bool,
}

struct Accumulator<'a> {
    grad: Option<&'a mut [f64]>,
    weight: f64,
    saturated: bool,
}

impl Accumulator<'_> {
    fn add(&mut self, k: usize, g: f64) {
        if let Some(grad) = self.grad.as_deref_mut() {
            grad[k] += self.weight * g;
        }
    }

    fn wants_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// `exp(t)` with `t` clamped; returns the value and its derivative in `t`.
    fn exp(&mut self, t: f64) -> (f64, f64) {
        if t > EXP_CLAMP {
            self.saturated = true;
            (EXP_CLAMP.exp(), 0.0)
        } else if t < -EXP_CLAMP {
            self.saturated = true;
            ((-EXP_CLAMP).exp(), 0.0)
        } else {
            let e = t.exp();
            (e, e)
        }
    }
}

fn softmax(s: &[f64]) -> Vec<f64> {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = s.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= z;
    }
    p
}

fn log_sum_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `max(0, 1 - t)^2` and its derivative.
fn phi_sq(t: f64) -> (f64, f64) {
    let r = (1.0 - t).max(0.0);
    (r * r, -2.0 * r)
}

/// `max(0, 1 - t)` and its right derivative.
fn phi_hinge(t: f64) -> (f64, f64) {
    if t < 1.0 {
        (1.0 - t, -1.0)
    } else {
        (0.0, 0.0)
    }
}

/// `min(max(0, 1 - t / rho), 1)` and its right derivative.
fn phi_rho(t: f64, rho: f64) -> (f64, f64) {
    if t < 0.0 {
        (1.0, 0.0)
    } else if t < rho {
        (1.0 - t / rho, -1.0 / rho)
    } else {
        (0.0, 0.0)
    }
}

/// Evaluates `weight * l(s, y)` into `grad` (when given) and returns `l(s, y)`.
///
/// No validation happens here; callers check lengths, finiteness and constraints.
pub(crate) fn evaluate(
    spec: &SurrogateSpec,
    s: &[f64],
    y: usize,
    grad: Option<&mut [f64]>,
    weight: f64,
) -> Evaluation {
    let mut acc = Accumulator {
        grad,
        weight,
        saturated: false,
    };
    let k = s.len();
    let value = match *spec {
        SurrogateSpec::CompSumExp => {
            let mut total = 0.0;
            let mut dy = 0.0;
            for j in (0..k).filter(|&j| j != y) {
                let (e, de) = acc.exp(s[j] - s[y]);
                total += e;
                acc.add(j, de);
                dy -= de;
            }
            acc.add(y, dy);
            total
        }
        SurrogateSpec::CompSumLog => {
            if acc.wants_grad() {
                let p = softmax(s);
                for (j, pj) in p.iter().enumerate() {
                    acc.add(j, pj - if j == y { 1.0 } else { 0.0 });
                }
            }
            log_sum_exp(s) - s[y]
        }
        SurrogateSpec::CompSumGce { alpha } => {
            let p = softmax(s);
            let pa = p[y].powf(alpha);
            if acc.wants_grad() {
                for (j, pj) in p.iter().enumerate() {
                    let delta = if j == y { 1.0 } else { 0.0 };
                    acc.add(j, -pa * (delta - pj));
                }
            }
            (1.0 - pa) / alpha
        }
        SurrogateSpec::CompSumMae => {
            let p = softmax(s);
            if acc.wants_grad() {
                for (j, pj) in p.iter().enumerate() {
                    let delta = if j == y { 1.0 } else { 0.0 };
                    acc.add(j, -p[y] * (delta - pj));
                }
            }
            1.0 - p[y]
        }
        SurrogateSpec::SumSq | SurrogateSpec::SumExp | SurrogateSpec::SumRho { .. } => {
            let mut total = 0.0;
            let mut dy = 0.0;
            for j in (0..k).filter(|&j| j != y) {
                let t = s[y] - s[j];
                let (v, dv) = match *spec {
                    SurrogateSpec::SumSq => phi_sq(t),
                    SurrogateSpec::SumRho { rho } => phi_rho(t, rho),
                    _ => {
                        let (e, de) = acc.exp(-t);
                        (e, -de)
                    }
                };
                total += v;
                dy += dv;
                acc.add(j, -dv);
            }
            acc.add(y, dy);
            total
        }
        SurrogateSpec::ConstrainedHinge
        | SurrogateSpec::ConstrainedSq
        | SurrogateSpec::ConstrainedExp
        | SurrogateSpec::ConstrainedRho { .. } => {
            let mut total = 0.0;
            for j in (0..k).filter(|&j| j != y) {
                let t = -s[j];
                let (v, dv) = match *spec {
                    SurrogateSpec::ConstrainedHinge => phi_hinge(t),
                    SurrogateSpec::ConstrainedSq => phi_sq(t),
                    SurrogateSpec::ConstrainedRho { rho } => phi_rho(t, rho),
                    _ => {
                        let (e, de) = acc.exp(-t);
                        (e, -de)
                    }
                };
                total += v;
                acc.add(j, -dv);
            }
            total
        }
    };
    Evaluation {
        value,
        saturated: acc.saturated,
    }
}

/// Distance from `s` to the nearest non-differentiable point of the base loss at label `y`.
///
/// Infinite for smooth variants. Finite-difference checks use this to stay off kinks.
pub fn kink_distance(spec: &SurrogateSpec, s: &[f64], y: usize) -> f64 {
    let others = (0..s.len()).filter(|&j| j != y);
    match *spec {
        SurrogateSpec::SumRho { rho } => others
            .map(|j| {
                let t = s[y] - s[j];
                t.abs().min((t - rho).abs())
            })
            .fold(f64::INFINITY, f64::min),
        SurrogateSpec::ConstrainedHinge => others
            .map(|j| (-s[j] - 1.0).abs())
            .fold(f64::INFINITY, f64::min),
        SurrogateSpec::ConstrainedRho { rho } => others
            .map(|j| {
                let t = -s[j];
                t.abs().min((t - rho).abs())
            })
            .fold(f64::INFINITY, f64::min),
        _ => f64::INFINITY,
    }
}
