//! The stagewise fitting engine.
//!
//! [`sbdr_fit`] runs the main loop. Each iteration updates every intercept by
//! a clipped gradient step, picks the column most correlated with each
//! parameter's gradient, drops candidates below the correlation threshold,
//! evaluates every parameter subset with semi-constant steps and keeps the
//! best one if it improves the log-likelihood on the next batch. The returned
//! model is the BIC-best iterate, optionally refitted to convergence.

mod config;
mod kernels;
mod sbdr;
mod state;
mod steps;
pub mod toy;

use ndarray::Array2;

pub use config::{FitConfig, Kappa, StrataConfig, UpdateMode};
pub use sbdr::{refit, resolve_kappa, sbdr_fit, sbdr_fit_with_schedule, schedule_for, threshold_descent, threshold_levels};
pub use state::{
    fmt_f64, CoefficientState, FitResult, IterationRecord, LevelSnapshot, MethodConfig, PathEntry, RefitResult, UpdateGain,
};
pub use steps::{
    argmin_first, best_subset_step, bic, correlation_filter, intercept_step, kappa_auto, moving_average,
    semi_constant_step, Candidate,
};

pub(crate) use state::{column_names, replay};
pub(crate) use kernels::{loglik as loglik_rows, scan, scores, shift_all, Rows, Shift};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::Family;

/// `g_k[i] = ∂ log d(y_i) / ∂η_k` at `state`, for the listed rows.
pub fn gradient_vector(
    family: Family,
    state: &CoefficientState,
    ds: &Dataset,
    k: usize,
    rows: &[usize],
) -> Result<Vec<f64>> {
    if k >= family.n_params() {
        return Err(Error::InvalidInput(format!("parameter {k} out of range")));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= ds.n()) {
        return Err(Error::InvalidInput(format!("row {r} out of range")));
    }
    let eta = state.eta(ds);
    let mut g = scores(family, ds.y(), &eta, Rows::Idx(rows))?;
    Ok(g.swap_remove(k))
}

/// Column of `x` (standardised) with the largest `|xᵀg|`, and its correlation
/// with `g`. `None` when `x` has no columns.
pub fn select_candidate(x: &Array2<f64>, g: &[f64]) -> Option<Candidate> {
    if x.nrows() != g.len() {
        return None;
    }
    let owned: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
    let cols: Vec<&[f64]> = owned.iter().map(Vec::as_slice).collect();
    scan(&cols, g, Rows::All(g.len()))
}

/// Full-data log-likelihood of a state.
pub fn loglik(family: Family, state: &CoefficientState, ds: &Dataset) -> f64 {
    let eta = state.eta(ds);
    let none = vec![Shift::default(); eta.len()];
    loglik_rows(family, ds.y(), &eta, Rows::All(ds.n()), &none)
}
