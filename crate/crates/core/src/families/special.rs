//! Log-gamma and digamma differences used by the count families.

use statrs::function::gamma::{digamma, ln_gamma};

// Below this count the finite sums are both faster and more accurate than
// differencing two large special-function values.
const SERIES_MAX: f64 = 32.0;

/// `ln Γ(y + r) − ln Γ(r)` for a nonnegative integer `y`.
pub(crate) fn ln_gamma_ratio(y: f64, r: f64) -> f64 {
    if y < SERIES_MAX {
        let mut acc = 0.0;
        let mut i = 0.0;
        while i < y {
            acc += (r + i).ln();
            i += 1.0;
        }
        acc
    } else {
        ln_gamma(y + r) - ln_gamma(r)
    }
}

/// `ψ(y + r) − ψ(r)` for a nonnegative integer `y`.
pub(crate) fn digamma_diff(y: f64, r: f64) -> f64 {
    if y < SERIES_MAX {
        let mut acc = 0.0;
        let mut i = 0.0;
        while i < y {
            acc += 1.0 / (r + i);
            i += 1.0;
        }
        acc
    } else {
        digamma(y + r) - digamma(r)
    }
}

pub(crate) fn ln_factorial(y: f64) -> f64 {
    ln_gamma(y + 1.0)
}
