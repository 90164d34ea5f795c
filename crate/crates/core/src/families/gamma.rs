//! Gamma with mean `μ` and variance `μ²σ²` (shape `1/σ²`), both log links.

use statrs::function::gamma::{digamma, gamma_lr, ln_gamma};

pub(crate) fn log_density(y: f64, mu: f64, sigma: f64) -> f64 {
    let a = 1.0 / (sigma * sigma);
    a * a.ln() - a * mu.ln() + (a - 1.0) * y.ln() - a * y / mu - ln_gamma(a)
}

pub(crate) fn score(y: f64, mu: f64, sigma: f64, out: &mut [f64]) {
    let a = 1.0 / (sigma * sigma);
    let ratio = y / mu;
    out[0] = a * (ratio - 1.0);
    out[1] = -2.0 * a * (a.ln() + 1.0 + ratio.ln() - ratio - digamma(a));
}

pub(crate) fn cdf(y: f64, mu: f64, sigma: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let a = 1.0 / (sigma * sigma);
    gamma_lr(a, y * a / mu)
}

pub(crate) fn shape_scale(mu: f64, sigma: f64) -> (f64, f64) {
    let a = 1.0 / (sigma * sigma);
    (a, mu / a)
}
