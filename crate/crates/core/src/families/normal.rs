//! Normal location-scale: `μ` identity link, `σ` log link.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn log_density(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    -LN_SQRT_2PI - sigma.ln() - 0.5 * z * z
}

/// Scores with respect to `η_μ = μ` and `η_σ = log σ`.
pub(crate) fn score(y: f64, mu: f64, sigma: f64, out: &mut [f64]) {
    let s2 = sigma * sigma;
    let r = y - mu;
    out[0] = r / s2;
    out[1] = r * r / s2 - 1.0;
}

pub(crate) fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub(crate) fn std_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn cdf(y: f64, mu: f64, sigma: f64) -> f64 {
    std_cdf((y - mu) / sigma)
}

/// Closed-form CRPS of a normal forecast.
pub(crate) fn crps(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    sigma * (z * (2.0 * std_cdf(z) - 1.0) + 2.0 * std_pdf(z) - 1.0 / PI.sqrt())
}
