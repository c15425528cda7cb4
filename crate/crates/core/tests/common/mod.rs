//! Independent oracles shared by the integration tests.
//!
//! Loss values are re-derived here from their textbook formulas, without the
//! library's max-subtraction, accumulation order or clamping, so agreement is
//! evidence rather than tautology. Inputs are kept small enough that the
//! library's exponent clamp never engages.

#![allow(dead_code)]

use l2d_core::domain::{ExpertPanel, FiniteDistribution};
use l2d_core::losses::SurrogateSpec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Base loss `l(s, y)` straight from its definition.
pub fn oracle_base(spec: &SurrogateSpec, s: &[f64], y: usize) -> f64 {
    let others = || (0..s.len()).filter(move |&j| j != y);
    let softmax_y = || {
        let z: f64 = s.iter().map(|v| v.exp()).sum();
        s[y].exp() / z
    };
    let phi_sq = |t: f64| (1.0 - t).max(0.0).powi(2);
    let phi_rho = |t: f64, rho: f64| (1.0 - t / rho).clamp(0.0, 1.0);
    match *spec {
        SurrogateSpec::CompSumExp => others().map(|j| (s[j] - s[y]).exp()).sum(),
        SurrogateSpec::CompSumLog => -softmax_y().ln(),
        SurrogateSpec::CompSumGce { alpha } => (1.0 - softmax_y().powf(alpha)) / alpha,
        SurrogateSpec::CompSumMae => 1.0 - softmax_y(),
        SurrogateSpec::SumSq => others().map(|j| phi_sq(s[y] - s[j])).sum(),
        SurrogateSpec::SumExp => others().map(|j| (s[j] - s[y]).exp()).sum(),
        SurrogateSpec::SumRho { rho } => others().map(|j| phi_rho(s[y] - s[j], rho)).sum(),
        SurrogateSpec::ConstrainedHinge => others().map(|j| (1.0 + s[j]).max(0.0)).sum(),
        SurrogateSpec::ConstrainedSq => others().map(|j| phi_sq(-s[j])).sum(),
        SurrogateSpec::ConstrainedExp => others().map(|j| s[j].exp()).sum(),
        SurrogateSpec::ConstrainedRho { rho } => others().map(|j| phi_rho(-s[j], rho)).sum(),
    }
}

/// Surrogate `l(s, y) + sum_j (1 - c_j) l(s, n + j)` from the oracle base loss.
pub fn oracle_surrogate(spec: &SurrogateSpec, classes: usize, s: &[f64], y: usize, costs: &[f64]) -> f64 {
    oracle_base(spec, s, y)
        + costs
            .iter()
            .enumerate()
            .map(|(j, c)| (1.0 - c) * oracle_base(spec, s, classes + j))
            .sum::<f64>()
}

/// Central finite-difference gradient of `f` at `s`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, s: &[f64], h: f64) -> Vec<f64> {
    let mut probe = s.to_vec();
    (0..s.len())
        .map(|i| {
            probe[i] = s[i] + h;
            let up = f(&probe);
            probe[i] = s[i] - h;
            let down = f(&probe);
            probe[i] = s[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Conditional deferral loss of every augmented label at point `x`, by direct summation over classes.
pub fn brute_deferral_losses(d: &FiniteDistribution, panel: &ExpertPanel, x: usize) -> Vec<f64> {
    let space = panel.space();
    let p = &d.points()[x].conditional;
    (0..space.size())
        .map(|label| {
            (0..space.classes())
                .map(|y| {
                    let cost = if label < space.classes() {
                        if label == y {
                            0.0
                        } else {
                            1.0
                        }
                    } else {
                        panel.cost(label - space.classes(), x, y)
                    };
                    p[y] * cost
                })
                .sum()
        })
        .collect()
}

/// First index of the largest score.
pub fn first_argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in s.iter().enumerate() {
        if *v > s[best] {
            best = i;
        }
    }
    best
}

/// Scores with independent `N(0, scale^2)` entries.
pub fn gaussian_scores<R: Rng>(rng: &mut R, k: usize, scale: f64) -> Vec<f64> {
    (0..k)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// Shifts `s` so that its entries sum to zero.
pub fn center(s: &mut [f64]) {
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    s.iter_mut().for_each(|v| *v -= mean);
}

/// `|a - b|` relative to `max(|a|, |b|, 1)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Path of a shipped experiment config.
pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}
