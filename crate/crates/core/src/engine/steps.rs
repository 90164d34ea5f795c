use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Best column for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Position within the parameter's column list.
    pub index: usize,
    /// Inner product `xᵀg`.
    pub ip: f64,
    /// Correlation between the column and the gradient.
    pub c: f64,
}

/// Step magnitude of the semi-constant rule for mean derivative `dl`.
///
/// Inside `[νε, ε]` the step is `|dl|`; above it is `ε`. Below `νε` it is lifted
/// to `νε` while `t < ρT` and left at `|dl|` afterwards.
pub fn semi_constant_step(dl: f64, eps: f64, nu: f64, t: usize, rho: f64, t_max: usize) -> f64 {
    let a = dl.abs();
    let floor = nu * eps;
    if a < floor {
        if clip_below(t, rho, t_max) {
            floor
        } else {
            a
        }
    } else if a <= eps {
        a
    } else {
        eps
    }
}

pub(crate) fn clip_below(t: usize, rho: f64, t_max: usize) -> bool {
    (t as f64) < rho * t_max as f64
}

/// Signed steps for a joint update of several parameters.
///
/// The derivative vector is rescaled to Euclidean length `ε` when longer, then
/// each component is lifted to `νε` while `t < ρT`. Zero derivatives stay zero.
pub fn best_subset_step(dls: &[f64], eps: f64, nu: f64, t: usize, rho: f64, t_max: usize) -> Vec<f64> {
    if let [dl] = dls {
        return vec![sign(*dl) * semi_constant_step(*dl, eps, nu, t, rho, t_max)];
    }
    let norm = dls.iter().map(|d| d * d).sum::<f64>().sqrt();
    let scale = if norm > eps { eps / norm } else { 1.0 };
    let lift = clip_below(t, rho, t_max);
    dls.iter()
        .map(|&d| {
            let v = d * scale;
            if lift {
                sign(v) * v.abs().max(nu * eps)
            } else {
                v
            }
        })
        .collect()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Clipped intercept step `sign(d)·min(|d|, ε)`.
pub fn intercept_step(d: f64, eps: f64) -> f64 {
    sign(d) * d.abs().min(eps)
}

/// Critical correlation for the maximum of `j` independent correlations at
/// level `alpha` with `m` observations, optionally clamped.
pub fn kappa_auto(alpha: f64, j: usize, m: usize, clamp: Option<(f64, f64)>) -> f64 {
    let j = j.max(1) as f64;
    let m = m.max(2) as f64;
    let p = 0.5 * (1.0 + (1.0 - alpha).powf(1.0 / j));
    let z = Normal::standard().inverse_cdf(p);
    let k = z * m.sqrt() / (m - 1.0);
    match clamp {
        Some((lo, hi)) => k.clamp(lo, hi),
        None => k,
    }
}

/// Drops candidates with `|c| ≤ κ_k`.
pub fn correlation_filter(candidates: &[Option<Candidate>], kappa: &[f64]) -> Vec<Option<Candidate>> {
    candidates
        .iter()
        .zip(kappa)
        .map(|(c, &k)| c.filter(|c| c.c.abs() > k))
        .collect()
}

/// `−2ℓ + df·log n`.
pub fn bic(loglik: f64, df: usize, n: usize) -> f64 {
    -2.0 * loglik + df as f64 * (n as f64).ln()
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        acc += v;
        if i >= w {
            acc -= values[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

/// Index of the smallest value; the earliest wins ties. NaNs never win.
pub fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn semi_constant_cases() {
        assert_eq!(semi_constant_step(0.005, 0.01, 0.1, 10, 0.8, 100), 0.005);
        assert!((semi_constant_step(0.0002, 0.01, 0.1, 10, 0.8, 100) - 0.001).abs() < 1e-18);
        assert_eq!(semi_constant_step(0.0002, 0.01, 0.1, 80, 0.8, 100), 0.0002);
        assert_eq!(semi_constant_step(-0.5, 0.01, 0.1, 10, 0.8, 100), 0.01);
    }

    #[test]
    fn best_subset_cases() {
        let s = best_subset_step(&[0.3, 0.4], 0.01, 0.1, 1, 0.8, 100);
        assert!((s[0] - 0.006).abs() < 1e-15 && (s[1] - 0.008).abs() < 1e-15);
        let s = best_subset_step(&[0.00005, 0.009], 0.01, 0.1, 1, 0.8, 100);
        assert!((s[0] - 0.001).abs() < 1e-15);
        assert_eq!(s[1], 0.009);
        let s = best_subset_step(&[0.0, -0.3], 0.01, 0.1, 1, 0.8, 100);
        assert_eq!(s[0], 0.0);
        assert!((s[1] + 0.01).abs() < 1e-15);
    }

    #[test]
    fn kappa_values() {
        assert!((kappa_auto(0.05, 1, 10_000, None) - 0.0196).abs() < 1e-4);
        assert!((kappa_auto(0.05, 100, 10_000, None) - 0.0347).abs() < 5e-4);
        assert_eq!(kappa_auto(0.05, 1, 10_000, Some((0.075, 0.175))), 0.075);
        assert_eq!(kappa_auto(0.05, 100, 20, Some((0.075, 0.175))), 0.175);
    }

    #[test]
    fn filter_and_bic() {
        let c = |v| Some(Candidate { index: 0, ip: v, c: v });
        let kept = correlation_filter(&[c(0.3), c(0.05)], &[0.15, 0.15]);
        assert!(kept[0].is_some() && kept[1].is_none());
        let kept = correlation_filter(&[c(0.3), c(0.05)], &[0.0, 0.0]);
        assert!(kept.iter().all(Option::is_some));
        assert!((bic(-100.0, 5, 1000) - 234.539).abs() < 1e-3);
        assert_eq!(bic(-3.0, 0, 7), 6.0);
    }

    #[test]
    fn moving_average_and_argmin() {
        assert_eq!(moving_average(&[1.0, 3.0, 5.0, 7.0], 2), vec![1.0, 2.0, 4.0, 6.0]);
        assert_eq!(argmin_first(&[3.0, 1.0, 1.0, 2.0]), 1);
    }

    proptest! {
        #[test]
        fn singleton_matches_scalar_rule(dl in -1.0f64..1.0, t in 0usize..200) {
            let s = best_subset_step(&[dl], 0.01, 0.1, t, 0.8, 100);
            let m = semi_constant_step(dl, 0.01, 0.1, t, 0.8, 100);
            prop_assert_eq!(s[0], dl.signum() * m * if dl == 0.0 { 0.0 } else { 1.0 });
        }

        #[test]
        fn steps_bounded(dls in proptest::collection::vec(-1.0f64..1.0, 1..4), t in 0usize..200) {
            let s = best_subset_step(&dls, 0.01, 0.1, t, 0.8, 100);
            for (v, d) in s.iter().zip(&dls) {
                prop_assert!(v.abs() <= 0.01 + 1e-15);
                prop_assert!(v * d >= 0.0);
            }
        }

        #[test]
        fn released_clip_never_exceeds_derivative(dl in -1.0f64..1.0, t in 80usize..200) {
            prop_assert!(semi_constant_step(dl, 0.01, 0.0, t, 0.8, 100) <= dl.abs());
            prop_assert!(semi_constant_step(dl, 0.01, 0.1, t, 0.8, 100) <= dl.abs());
        }
    }
}
