use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Approximation error minus minimizability gap for the binary exponential loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryExpGap {
    /// From the clamped minimizer `clamp(log(eta / (1 - eta)) / 2, -lambda, lambda)`.
    pub closed_form: f64,
    /// From golden-section search over `[-lambda, lambda]` and a wide interval.
    pub numeric: f64,
}

fn conditional(eta: f64, h: f64) -> f64 {
    let mut v = 0.0;
    if eta > 0.0 {
        v += eta * (-h).exp();
    }
    if eta < 1.0 {
        v += (1.0 - eta) * h.exp();
    }
    v
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..300 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    [f(lo), f(hi), fa, fb].into_iter().fold(f64::INFINITY, f64::min)
}

/// `A - M` at a single input with conditional `eta` for scores bounded by `lambda`.
pub fn binary_exp_gap(eta: f64, lambda: f64) -> Result<BinaryExpGap> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta = {eta} must lie in [0, 1]")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let unclamped = if eta == 1.0 {
        f64::INFINITY
    } else if eta == 0.0 {
        f64::NEG_INFINITY
    } else {
        0.5 * (eta / (1.0 - eta)).ln()
    };
    let h = unclamped.clamp(-lambda, lambda);
    let closed_form = conditional(eta, h) - 2.0 * (eta * (1.0 - eta)).sqrt();
    let restricted = golden_section(|h| conditional(eta, h), -lambda, lambda);
    let wide = lambda.max(50.0);
    let unrestricted = golden_section(|h| conditional(eta, h), -wide, wide);
    Ok(BinaryExpGap {
        closed_form,
        numeric: restricted - unrestricted,
    })
}
