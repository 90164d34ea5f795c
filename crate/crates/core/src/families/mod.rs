//! Response distributions with linked parameters.
//!
//! Every family exposes its log-density and the score with respect to the
//! linear predictors `η_k = h_k(θ_k)`. The hot paths ([`Family::log_density_eta`],
//! [`Family::score_eta`]) take predictors directly and skip validation; the
//! public natural-parameter entry points validate first.

mod gamma;
mod link;
mod mle;
mod nbi;
mod normal;
mod special;
mod zanbi;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use link::{logistic, softplus, Link};

/// Draws used by the sample-based CRPS estimator.
pub const DEFAULT_CRPS_DRAWS: usize = 1000;

/// Truncation point for the discrete ranked probability score.
const RPS_TAIL: f64 = 1e-6;

/// Supported response families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "NO")]
    Normal,
    #[serde(rename = "GA")]
    Gamma,
    #[serde(rename = "NBI")]
    NegBin,
    #[serde(rename = "ZANBI")]
    ZaNegBin,
}

/// Distribution parameters in their natural space, e.g. `(μ, σ, ν)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self(values.into())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Normal, Family::Gamma, Family::NegBin, Family::ZaNegBin];

    pub fn id(self) -> &'static str {
        match self {
            Family::Normal => "NO",
            Family::Gamma => "GA",
            Family::NegBin => "NBI",
            Family::ZaNegBin => "ZANBI",
        }
    }

    /// Number of distribution parameters `K`.
    pub fn n_params(self) -> usize {
        self.links().len()
    }

    pub fn links(self) -> &'static [Link] {
        match self {
            Family::Normal => &[Link::Identity, Link::Log],
            Family::Gamma | Family::NegBin => &[Link::Log, Link::Log],
            Family::ZaNegBin => &[Link::Log, Link::Log, Link::Logit],
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::ZaNegBin => &["mu", "sigma", "nu"],
            _ => &["mu", "sigma"],
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Family::NegBin | Family::ZaNegBin)
    }

    /// Checks that `y` lies in the support.
    pub fn check_observation(self, y: f64) -> Result<()> {
        let ok = match self {
            Family::Normal => y.is_finite(),
            Family::Gamma => y.is_finite() && y > 0.0,
            Family::NegBin | Family::ZaNegBin => y.is_finite() && y >= 0.0 && y.fract() == 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Support { family: self.id(), value: y })
        }
    }

    /// Checks that every parameter lies in its domain.
    pub fn check_params(self, theta: &ParamVector) -> Result<()> {
        let links = self.links();
        if theta.0.len() != links.len() {
            return Err(Error::InvalidInput(format!(
                "{} expects {} parameters, got {}",
                self.id(),
                links.len(),
                theta.0.len()
            )));
        }
        for ((&value, link), name) in theta.0.iter().zip(links).zip(self.param_names()) {
            if !link.in_domain(value) {
                return Err(Error::Domain { name, value });
            }
        }
        Ok(())
    }

    /// Maps natural parameters to predictors.
    pub fn to_eta(self, theta: &ParamVector) -> Vec<f64> {
        theta.0.iter().zip(self.links()).map(|(&t, l)| l.link(t)).collect()
    }

    /// Maps predictors to natural parameters.
    pub fn to_theta(self, eta: &[f64]) -> ParamVector {
        ParamVector(eta.iter().zip(self.links()).map(|(&e, l)| l.inverse(e)).collect())
    }

    /// `log d_y(y; θ)`.
    pub fn log_density(self, y: f64, theta: &ParamVector) -> Result<f64> {
        self.check_params(theta)?;
        self.check_observation(y)?;
        Ok(self.log_density_eta(y, &self.to_eta(theta)))
    }

    /// `∂ log d_y / ∂η_k` for every `k`, evaluated at `θ`.
    pub fn grad_eta(self, y: f64, theta: &ParamVector) -> Result<Vec<f64>> {
        self.check_params(theta)?;
        self.check_observation(y)?;
        let mut out = vec![0.0; self.n_params()];
        self.score_eta(y, &self.to_eta(theta), &mut out);
        Ok(out)
    }

    /// Log-density at predictor values. No validation.
    #[inline]
    pub fn log_density_eta(self, y: f64, eta: &[f64]) -> f64 {
        match self {
            Family::Normal => normal::log_density(y, eta[0], eta[1].exp()),
            Family::Gamma => gamma::log_density(y, eta[0].exp(), eta[1].exp()),
            Family::NegBin => nbi::log_pmf(y, eta[0].exp(), eta[1].exp()),
            Family::ZaNegBin => {
                if y == 0.0 {
                    -softplus(-eta[2])
                } else {
                    zanbi::log_density(y, eta[0].exp(), eta[1].exp(), 0.0, -softplus(eta[2]))
                }
            }
        }
    }

    /// Score with respect to the predictors, written into `out` (length `K`).
    #[inline]
    pub fn score_eta(self, y: f64, eta: &[f64], out: &mut [f64]) {
        match self {
            Family::Normal => normal::score(y, eta[0], eta[1].exp(), out),
            Family::Gamma => gamma::score(y, eta[0].exp(), eta[1].exp(), out),
            Family::NegBin => nbi::score(y, eta[0].exp(), eta[1].exp(), out),
            Family::ZaNegBin => zanbi::score(y, eta[0].exp(), eta[1].exp(), logistic(eta[2]), out),
        }
    }

    /// Draws one observation.
    pub fn sample<R: Rng + ?Sized>(self, theta: &ParamVector, rng: &mut R) -> Result<f64> {
        self.check_params(theta)?;
        Ok(self.sample_unchecked(&theta.0, rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(self, theta: &[f64], rng: &mut R) -> f64 {
        match self {
            Family::Normal => Normal::new(theta[0], theta[1]).expect("sigma > 0").sample(rng),
            Family::Gamma => {
                let (shape, scale) = gamma::shape_scale(theta[0], theta[1]);
                GammaDist::new(shape, scale).expect("valid gamma").sample(rng)
            }
            Family::NegBin => nbi::sample(theta[0], theta[1], rng),
            Family::ZaNegBin => zanbi::sample(theta[0], theta[1], theta[2], rng),
        }
    }

    /// `P(Y ≤ y)`.
    pub fn cdf(self, theta: &ParamVector, y: f64) -> Result<f64> {
        self.check_params(theta)?;
        let t = &theta.0;
        Ok(match self {
            Family::Normal => normal::cdf(y, t[0], t[1]),
            Family::Gamma => gamma::cdf(y, t[0], t[1]),
            Family::NegBin => nbi::cdf(y, t[0], t[1]),
            Family::ZaNegBin => zanbi::cdf(y, t[0], t[1], t[2]),
        })
    }

    /// `P(Y ≥ c)` for a count threshold `c`.
    pub fn exceedance(self, theta: &ParamVector, c: f64) -> Result<f64> {
        if c <= 0.0 {
            return Ok(1.0);
        }
        let below = if self.is_discrete() {
            self.cdf(theta, c.ceil() - 1.0)?
        } else {
            self.cdf(theta, c)?
        };
        Ok((1.0 - below).max(0.0))
    }

    /// Continuous (or, for counts, discrete) ranked probability score with the
    /// default number of draws for sample-based families.
    pub fn crps<R: Rng + ?Sized>(self, theta: &ParamVector, y: f64, rng: &mut R) -> Result<f64> {
        self.crps_with_draws(theta, y, DEFAULT_CRPS_DRAWS, rng)
    }

    /// Ranked probability score. `NO` is closed form; `GA` uses the sample
    /// estimator `E|Y − y| − ½E|Y − Y'|` with `draws` draws; the count
    /// families sum `(F(k) − 1{y ≤ k})²` until `F(k) > 1 − 1e-6` past `y`.
    pub fn crps_with_draws<R: Rng + ?Sized>(
        self,
        theta: &ParamVector,
        y: f64,
        draws: usize,
        rng: &mut R,
    ) -> Result<f64> {
        self.check_params(theta)?;
        let t = &theta.0;
        let score = match self {
            Family::Normal => normal::crps(y, t[0], t[1]),
            Family::Gamma => {
                if draws < 2 {
                    return Err(Error::InvalidInput("CRPS needs at least 2 draws".into()));
                }
                let (shape, scale) = gamma::shape_scale(t[0], t[1]);
                let dist = GammaDist::new(shape, scale).expect("valid gamma");
                let mut xs: Vec<f64> = (0..draws).map(|_| dist.sample(rng)).collect();
                sample_crps(&mut xs, y)
            }
            Family::NegBin | Family::ZaNegBin => {
                let mut acc = 0.0;
                let mut cum = 0.0;
                let mut k = 0.0;
                let walk = nbi::LogPmfWalk::new(t[0], t[1]);
                let (nu, positive) = match self {
                    Family::ZaNegBin => (t[2], -nbi::log_p0(t[0], t[1]).exp_m1()),
                    _ => (0.0, 1.0),
                };
                for lp in walk {
                    let mass = if self == Family::ZaNegBin {
                        if k == 0.0 {
                            nu
                        } else {
                            (1.0 - nu) * lp.exp() / positive
                        }
                    } else {
                        lp.exp()
                    };
                    cum = (cum + mass).min(1.0);
                    let ind = if y <= k { 1.0 } else { 0.0 };
                    acc += (cum - ind) * (cum - ind);
                    if k >= y && cum > 1.0 - RPS_TAIL {
                        break;
                    }
                    k += 1.0;
                    if k > 1e8 {
                        break;
                    }
                }
                acc
            }
        };
        Ok(score.max(0.0))
    }

    /// Intercept-only maximum likelihood estimates, in predictor space. For
    /// the count families a maximum on the boundary of the parameter space is
    /// replaced by moment estimates.
    pub fn mle_intercepts(self, y: &[f64]) -> Result<Vec<f64>> {
        mle::intercepts(self, y)
    }
}

/// Sample estimator of the CRPS from forecast draws (sorted in place).
pub(crate) fn sample_crps(xs: &mut [f64], y: f64) -> f64 {
    let m = xs.len() as f64;
    let to_obs = xs.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
    xs.sort_by(|a, b| a.total_cmp(b));
    // Mean absolute difference over distinct pairs via order statistics.
    let weighted: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - m - 1.0) * x)
        .sum();
    let spread = 2.0 * weighted / (m * (m - 1.0));
    to_obs - 0.5 * spread
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NO" => Ok(Family::Normal),
            "GA" => Ok(Family::Gamma),
            "NBI" => Ok(Family::NegBin),
            "ZANBI" => Ok(Family::ZaNegBin),
            other => Err(Error::InvalidInput(format!("unknown family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from(v)
    }

    #[test]
    fn standard_normal_at_mode() {
        let ld = Family::Normal.log_density(0.0, &pv(&[0.0, 1.0])).unwrap();
        assert!((ld + 0.918_938_533_204_672_8).abs() < 1e-12);
    }

    #[test]
    fn zanbi_zero_mass_is_nu() {
        for &(mu, sigma) in &[(2.0, 1.0), (0.3, 5.0), (40.0, 0.01)] {
            let ld = Family::ZaNegBin.log_density(0.0, &pv(&[mu, sigma, 0.3])).unwrap();
            assert!((ld - 0.3f64.ln()).abs() < 1e-12);
        }
        assert!((0.3f64.ln() + 1.2040).abs() < 1e-4);
    }

    #[test]
    fn normal_scores_closed_form() {
        let g = Family::Normal.grad_eta(0.0, &pv(&[0.0, 1.0])).unwrap();
        assert_eq!(g, vec![0.0, -1.0]);
        let g = Family::Normal.grad_eta(2.0, &pv(&[1.0, 1.0])).unwrap();
        assert_eq!(g, vec![1.0, 0.0]);
    }

    #[test]
    fn domain_errors_name_the_parameter() {
        let err = Family::Normal.log_density(0.0, &pv(&[0.0, -1.0])).unwrap_err();
        assert!(matches!(err, Error::Domain { name: "sigma", .. }));
        let err = Family::ZaNegBin.log_density(1.0, &pv(&[1.0, 1.0, 1.5])).unwrap_err();
        assert!(matches!(err, Error::Domain { name: "nu", .. }));
        assert!(Family::Gamma.log_density(0.0, &pv(&[1.0, 1.0])).is_err());
        assert!(Family::NegBin.log_density(1.5, &pv(&[1.0, 1.0])).is_err());
        assert!(Family::NegBin.log_density(1.0, &pv(&[1.0])).is_err());
    }

    #[test]
    fn normal_crps_at_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = Family::Normal.crps(&pv(&[0.0, 1.0]), 0.0, &mut rng).unwrap();
        assert!((c - 0.233_695).abs() < 1e-5, "{c}");
        let sharp = Family::Normal.crps(&pv(&[0.0, 1e-6]), 0.0, &mut rng).unwrap();
        assert!(sharp < 1e-6);
    }

    #[test]
    fn count_exceedance_at_one_is_one_minus_nu() {
        let theta = pv(&[2.0, 0.5, 0.35]);
        let p = Family::ZaNegBin.exceedance(&theta, 1.0).unwrap();
        assert!((p - 0.65).abs() < 1e-12);
        assert_eq!(Family::ZaNegBin.exceedance(&theta, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn parses_ids() {
        for f in Family::ALL {
            assert_eq!(f.id().parse::<Family>().unwrap(), f);
        }
        assert!("WEI".parse::<Family>().is_err());
    }
}
