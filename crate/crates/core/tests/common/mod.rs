#![allow(dead_code)]

use rand::Rng;
use stagewise::{Family, ParamVector};

/// Interior parameter point drawn over a range that covers typical fits.
pub fn random_theta<R: Rng>(family: Family, rng: &mut R) -> ParamVector {
    let v = match family {
        Family::Normal => vec![rng.random_range(-3.0..3.0), rng.random_range(0.2..3.0)],
        Family::Gamma => vec![rng.random_range(0.2..5.0), rng.random_range(0.2..2.0)],
        Family::NegBin => vec![rng.random_range(0.2..10.0), rng.random_range(0.05..3.0)],
        Family::ZaNegBin => {
            vec![rng.random_range(0.2..10.0), rng.random_range(0.05..3.0), rng.random_range(0.05..0.95)]
        }
    };
    ParamVector::new(v)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Central difference of `f` at `x` along coordinate `k`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut dn = x.to_vec();
    up[k] += h;
    dn[k] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}

/// Relative error with unit floor on the scale.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use stagewise::data::Dataset;
use stagewise::simlab::{CovariateDesign, SimData, Truth};

/// Simulated dataset under the standard truth for `family` with `nnoise`
/// extra covariates.
pub fn sim_dataset(family: Family, n: usize, nnoise: usize, rho: f64, seed: u64) -> (Dataset, SimData) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = Truth::standard(family).unwrap();
    let design = CovariateDesign::new(6 + nnoise, rho, &mut rng).unwrap();
    let sim = SimData::generate(&truth, design.draw(n, &mut rng), &mut rng).unwrap();
    (sim.dataset(family).unwrap(), sim)
}
