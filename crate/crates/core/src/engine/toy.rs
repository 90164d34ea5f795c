//! One-parameter NBI example for comparing gradient-proportional and
//! semi-constant updates of `β_σ` with `β_μ` held fixed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::steps::semi_constant_step;
use crate::families::{Family, ParamVector};

/// Intercept-only NBI sample.
#[derive(Debug, Clone)]
pub struct NbiToy {
    pub y: Vec<f64>,
}

impl NbiToy {
    pub fn simulate(n: usize, mu: f64, sigma: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = ParamVector::new(vec![mu, sigma]);
        let y = (0..n).map(|_| Family::NegBin.sample(&theta, &mut rng).expect("valid parameters")).collect();
        Self { y }
    }

    /// Mean log-likelihood.
    pub fn loglik(&self, b_mu: f64, b_sigma: f64) -> f64 {
        let eta = [b_mu, b_sigma];
        self.y.iter().map(|&y| Family::NegBin.log_density_eta(y, &eta)).sum::<f64>() / self.y.len() as f64
    }

    /// Mean derivatives with respect to `(β_μ, β_σ)`.
    pub fn gradient(&self, b_mu: f64, b_sigma: f64) -> [f64; 2] {
        let eta = [b_mu, b_sigma];
        let mut s = [0.0; 2];
        let mut acc = [0.0; 2];
        for &y in &self.y {
            Family::NegBin.score_eta(y, &eta, &mut s);
            acc[0] += s[0];
            acc[1] += s[1];
        }
        let n = self.y.len() as f64;
        [acc[0] / n, acc[1] / n]
    }

    /// `β_σ` after each semi-constant step; element 0 is the start.
    pub fn sc_sdr_path(&self, b_mu: f64, b_sigma: f64, eps: f64, nu: f64, rho: f64, t_max: usize) -> Vec<f64> {
        let mut b = b_sigma;
        let mut path = Vec::with_capacity(t_max + 1);
        path.push(b);
        for t in 1..=t_max {
            let dl = self.gradient(b_mu, b)[1];
            b += dl.signum() * if dl == 0.0 { 0.0 } else { semi_constant_step(dl, eps, nu, t, rho, t_max) };
            path.push(b);
        }
        path
    }

    /// `β_σ` after each gradient step `lr·∂ℓ`; element 0 is the start.
    pub fn gradient_path(&self, b_mu: f64, b_sigma: f64, lr: f64, t_max: usize) -> Vec<f64> {
        let mut b = b_sigma;
        let mut path = Vec::with_capacity(t_max + 1);
        path.push(b);
        for _ in 0..t_max {
            b += lr * self.gradient(b_mu, b)[1];
            path.push(b);
        }
        path
    }
}
