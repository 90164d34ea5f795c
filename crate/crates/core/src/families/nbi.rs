//! Negative binomial type I: mean `μ`, variance `μ + σμ²`, both log links.
//!
//! For `σμ` below [`POISSON_SWITCH`] the density is replaced by its first-order
//! expansion around the Poisson limit, which avoids cancellation between the
//! log-gamma terms and `y·log(σμ)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::special::{digamma_diff, ln_factorial, ln_gamma_ratio};

pub(crate) const POISSON_SWITCH: f64 = 1e-8;

pub(crate) fn log_pmf(y: f64, mu: f64, sigma: f64) -> f64 {
    let sm = sigma * mu;
    if sm < POISSON_SWITCH {
        let d = y - mu;
        return y * mu.ln() - mu - ln_factorial(y) + 0.5 * sigma * (d * d - y);
    }
    let r = 1.0 / sigma;
    let l1p = sm.ln_1p();
    ln_gamma_ratio(y, r) - ln_factorial(y) + y * (sm.ln() - l1p) - r * l1p
}

/// `log P(Y = 0)`.
pub(crate) fn log_p0(mu: f64, sigma: f64) -> f64 {
    let sm = sigma * mu;
    if sm < POISSON_SWITCH {
        -mu + 0.5 * sigma * mu * mu
    } else {
        -sm.ln_1p() / sigma
    }
}

/// Scores with respect to `log μ` and `log σ`.
pub(crate) fn score(y: f64, mu: f64, sigma: f64, out: &mut [f64]) {
    let sm = sigma * mu;
    if sm < POISSON_SWITCH {
        let d = y - mu;
        out[0] = d - sm * d;
        out[1] = 0.5 * sigma * (d * d - y);
        return;
    }
    let r = 1.0 / sigma;
    let common = (y - mu) / (1.0 + sm);
    out[0] = common;
    out[1] = r * (sm.ln_1p() - digamma_diff(y, r)) + common;
}

/// Derivatives of `log P(Y = 0)` with respect to `log μ` and `log σ`.
pub(crate) fn log_p0_score(mu: f64, sigma: f64) -> (f64, f64) {
    let sm = sigma * mu;
    if sm < POISSON_SWITCH {
        return (-mu + sigma * mu * mu, 0.5 * sigma * mu * mu);
    }
    (-mu / (1.0 + sm), sm.ln_1p() / sigma - mu / (1.0 + sm))
}

/// Walks `log P(Y = k)` for `k = 0, 1, 2, ...` by the ratio recursion.
pub(crate) struct LogPmfWalk {
    k: f64,
    current: f64,
    r: Option<f64>,
    log_odds: f64,
    log_mu: f64,
}

impl LogPmfWalk {
    pub(crate) fn new(mu: f64, sigma: f64) -> Self {
        let sm = sigma * mu;
        let poisson = sm < POISSON_SWITCH;
        Self {
            k: 0.0,
            current: log_p0(mu, sigma),
            r: if poisson { None } else { Some(1.0 / sigma) },
            log_odds: if poisson { 0.0 } else { sm.ln() - sm.ln_1p() },
            log_mu: mu.ln(),
        }
    }
}

impl Iterator for LogPmfWalk {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.current;
        let k = self.k;
        self.current += match self.r {
            Some(r) => ((k + r) / (k + 1.0)).ln() + self.log_odds,
            None => self.log_mu - (k + 1.0).ln(),
        };
        self.k += 1.0;
        Some(out)
    }
}

pub(crate) fn cdf(y: f64, mu: f64, sigma: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let top = y.floor() as u64;
    let total: f64 = LogPmfWalk::new(mu, sigma)
        .take(top as usize + 1)
        .map(f64::exp)
        .sum();
    total.min(1.0)
}

pub(crate) fn sample<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    let sm = sigma * mu;
    let lambda = if sm < POISSON_SWITCH {
        mu
    } else {
        let r = 1.0 / sigma;
        Gamma::new(r, sm).expect("valid gamma").sample(rng)
    };
    if lambda <= 0.0 {
        return 0.0;
    }
    Poisson::new(lambda).expect("valid poisson").sample(rng)
}
