//! Zero-adjusted NBI: point mass `ν` at zero, zero-truncated NBI on the
//! positives. `μ`, `σ` log links, `ν` logit link.

use rand::Rng;

use super::nbi;

/// `log(1 − P_NBI(0))` from `log P_NBI(0)`.
fn log_positive_mass(lp0: f64) -> f64 {
    (-lp0.exp_m1()).ln()
}

pub(crate) fn log_density(y: f64, mu: f64, sigma: f64, log_nu: f64, log_1m_nu: f64) -> f64 {
    if y == 0.0 {
        log_nu
    } else {
        log_1m_nu + nbi::log_pmf(y, mu, sigma) - log_positive_mass(nbi::log_p0(mu, sigma))
    }
}

pub(crate) fn score(y: f64, mu: f64, sigma: f64, nu: f64, out: &mut [f64]) {
    if y == 0.0 {
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = 1.0 - nu;
        return;
    }
    nbi::score(y, mu, sigma, out);
    let lp0 = nbi::log_p0(mu, sigma);
    // p0 / (1 - p0)
    let odds0 = 1.0 / (-lp0).exp_m1();
    let (d_mu, d_sigma) = nbi::log_p0_score(mu, sigma);
    out[0] += odds0 * d_mu;
    out[1] += odds0 * d_sigma;
    out[2] = -nu;
}

pub(crate) fn cdf(y: f64, mu: f64, sigma: f64, nu: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let p0 = nbi::log_p0(mu, sigma).exp();
    let positive = -nbi::log_p0(mu, sigma).exp_m1();
    let f = nbi::cdf(y, mu, sigma);
    (nu + (1.0 - nu) * ((f - p0) / positive).clamp(0.0, 1.0)).min(1.0)
}

/// Draw from the zero-truncated NBI.
///
/// Rejection from the untruncated NBI accepts with probability `1 − P(0)`; when
/// `P(0) > 0.99` the inverse cdf is walked directly instead.
pub(crate) fn sample_truncated<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    let lp0 = nbi::log_p0(mu, sigma);
    if lp0.exp() <= 0.99 {
        loop {
            let y = nbi::sample(mu, sigma, rng);
            if y > 0.0 {
                return y;
            }
        }
    }
    let positive = -lp0.exp_m1();
    let target = rng.random::<f64>() * positive;
    let mut acc = 0.0;
    for (k, lp) in nbi::LogPmfWalk::new(mu, sigma).enumerate().skip(1) {
        acc += lp.exp();
        if acc >= target || k > 10_000_000 {
            return k as f64;
        }
    }
    unreachable!("pmf walk is infinite")
}

pub(crate) fn sample<R: Rng + ?Sized>(mu: f64, sigma: f64, nu: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < nu {
        0.0
    } else {
        sample_truncated(mu, sigma, rng)
    }
}
