//! Expected Improvement in closed form.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const DEFAULT_XI: f64 = 0.01;

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z * FRAC_1_SQRT_2)
}

/// `E[max(0, f − t_best)]` for `f ~ N(mu, std²)`, shifted by `xi`.
pub fn expected_improvement(mu: f64, std: f64, t_best: f64, xi: f64) -> f64 {
    let delta = mu - t_best - xi;
    if std > 0.0 {
        let z = delta / std;
        (delta * normal_cdf(z) + std * normal_pdf(z)).max(0.0)
    } else {
        delta.max(0.0)
    }
}
