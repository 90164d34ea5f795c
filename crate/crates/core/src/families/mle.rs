use nalgebra::{DMatrix, DVector};

use super::Family;
use crate::error::{Error, Result};

const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
const HESS_H: f64 = 1e-5;
const ETA_LIMIT: f64 = 50.0;
/// Count-family MLEs beyond this predictor magnitude sit on the boundary of
/// the parameter space (Poisson or log-series limits) and are replaced by
/// moment estimates.
const COUNT_ETA_BOUND: f64 = 10.0;

pub(super) fn intercepts(family: Family, y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::InvalidInput("empty response".into()));
    }
    for &v in y {
        family.check_observation(v)?;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    match family {
        Family::Normal => {
            if var <= 0.0 {
                return Err(Error::InvalidInput("constant response has no normal MLE".into()));
            }
            Ok(vec![mean, 0.5 * var.ln()])
        }
        Family::Gamma => {
            let cv = (var.sqrt() / mean).max(1e-3);
            newton(family, y, vec![mean.ln(), cv.ln()], 2)
        }
        Family::NegBin => {
            let start = vec![mean.max(1e-3).ln(), nbi_start(mean, var)];
            Ok(interior_or(newton(family, y, start.clone(), 2), start))
        }
        Family::ZaNegBin => {
            let positives: Vec<f64> = y.iter().copied().filter(|&v| v > 0.0).collect();
            let zeros = y.len() - positives.len();
            if zeros == 0 || positives.is_empty() {
                return Err(Error::InvalidInput(
                    "ZANBI intercepts need both zero and positive observations".into(),
                ));
            }
            let frac = zeros as f64 / n;
            let nu = frac.ln() - (-frac).ln_1p();
            let pm = positives.iter().sum::<f64>() / positives.len() as f64;
            let pv = positives.iter().map(|v| (v - pm).powi(2)).sum::<f64>() / positives.len() as f64;
            // Start from the moments of the positives; the truncation shifts them but
            // Newton copes from there.
            let start = vec![pm.ln(), nbi_start(pm, pv), nu];
            let mut eta = interior_or(newton(family, &positives, start.clone(), 2), start);
            eta[2] = nu;
            Ok(eta)
        }
    }
}

fn interior_or(fit: Result<Vec<f64>>, start: Vec<f64>) -> Vec<f64> {
    match fit {
        Ok(eta) if eta.iter().all(|e| e.abs() <= COUNT_ETA_BOUND) => eta,
        _ => start,
    }
}

fn nbi_start(mean: f64, var: f64) -> f64 {
    ((var - mean) / (mean * mean)).max(0.05).ln()
}

/// Mean log-likelihood and mean score over the first `free` predictors.
fn eval(family: Family, y: &[f64], eta: &[f64], free: usize) -> (f64, Vec<f64>) {
    let n = y.len() as f64;
    let mut ll = 0.0;
    let mut grad = vec![0.0; free];
    let mut s = vec![0.0; eta.len()];
    for &v in y {
        ll += family.log_density_eta(v, eta);
        family.score_eta(v, eta, &mut s);
        for (g, si) in grad.iter_mut().zip(&s) {
            *g += si;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (ll / n, grad)
}

/// Damped Newton ascent on the mean log-likelihood. The Hessian is a central
/// difference of the analytic score.
fn newton(family: Family, y: &[f64], mut eta: Vec<f64>, free: usize) -> Result<Vec<f64>> {
    let (mut ll, mut grad) = eval(family, y, &eta, free);
    for _ in 0..MAX_ITER {
        if grad.iter().all(|g| g.abs() < GRAD_TOL) {
            return Ok(eta);
        }
        let mut hess = DMatrix::zeros(free, free);
        for j in 0..free {
            let mut up = eta.clone();
            let mut dn = eta.clone();
            up[j] += HESS_H;
            dn[j] -= HESS_H;
            let (_, gu) = eval(family, y, &up, free);
            let (_, gd) = eval(family, y, &dn, free);
            for i in 0..free {
                hess[(i, j)] = (gu[i] - gd[i]) / (2.0 * HESS_H);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let g = DVector::from_column_slice(&grad);
        // Ascent direction from the negated Hessian; plain gradient if it is not
        // positive definite.
        let dir = match (-hess).cholesky() {
            Some(ch) => ch.solve(&g),
            None => g.clone(),
        };
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let mut cand = eta.clone();
            for j in 0..free {
                cand[j] += step * dir[j];
            }
            let (cll, cgrad) = eval(family, y, &cand, free);
            if cll.is_finite() && cll >= ll {
                eta = cand;
                ll = cll;
                grad = cgrad;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if eta.iter().any(|e| e.abs() > ETA_LIMIT) || !moved {
            break;
        }
    }
    if grad.iter().all(|g| g.abs() < GRAD_TOL) {
        return Ok(eta);
    }
    Err(Error::NoConvergence { what: "intercept MLE", iterations: MAX_ITER, last: eta })
}
