use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::FitConfig;
use crate::baseline::GbConfig;
use crate::data::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::families::Family;

/// Coefficients per parameter: `[β₀, β₁, …, β_{J_k}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientState {
    pub beta: Vec<Vec<f64>>,
    /// Iteration the state belongs to.
    pub t: usize,
}

impl CoefficientState {
    /// Given intercepts and zero slopes.
    pub fn from_intercepts(intercepts: &[f64], ds: &Dataset) -> Self {
        let beta = intercepts
            .iter()
            .enumerate()
            .map(|(k, &b0)| {
                let mut v = vec![0.0; ds.n_cols(k) + 1];
                v[0] = b0;
                v
            })
            .collect();
        Self { beta, t: 0 }
    }

    /// Number of non-zero slopes.
    pub fn df(&self) -> usize {
        self.beta.iter().map(|b| b[1..].iter().filter(|v| **v != 0.0).count()).sum()
    }

    /// Linear predictors on every row of `ds`.
    pub fn eta(&self, ds: &Dataset) -> Vec<Vec<f64>> {
        self.beta
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let mut e = vec![b[0]; ds.n()];
                for (m, &j) in ds.columns(k).iter().enumerate() {
                    let s = b[m + 1];
                    if s != 0.0 {
                        e.iter_mut().zip(ds.col(j)).for_each(|(ei, xi)| *ei += s * xi);
                    }
                }
                e
            })
            .collect()
    }

    /// Shared-matrix indices of the non-zero slopes, per parameter.
    pub fn selected(&self, ds_columns: &[Vec<usize>]) -> Vec<Vec<usize>> {
        self.beta
            .iter()
            .zip(ds_columns)
            .map(|(b, cols)| cols.iter().zip(&b[1..]).filter(|(_, v)| **v != 0.0).map(|(j, _)| *j).collect())
            .collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (k, b) in self.beta.iter().enumerate() {
            if let Some(m) = b.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "coefficient", location: format!("parameter {k}, index {m}") });
            }
        }
        Ok(())
    }
}

/// A coefficient taking a new value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub iteration: usize,
    pub parameter: usize,
    /// 0 is the intercept; `m + 1` is the parameter's `m`-th column.
    pub coef: usize,
    pub value: f64,
}

/// Per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub loglik: f64,
    pub df: usize,
    pub bic: f64,
    /// Parameters whose slope moved; `Some([])` means only intercepts moved.
    pub updated: Option<Vec<usize>>,
}

/// Outcome of boosting the selected variables to convergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefitResult {
    pub state: CoefficientState,
    pub converged: bool,
    pub iterations: usize,
    /// Full-data log-likelihood of the refitted state.
    pub loglik: f64,
    pub bic: f64,
}

/// One threshold level of a threshold-descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSnapshot {
    pub kappa: f64,
    /// Last iteration of the level.
    pub iteration: usize,
    pub selected: Vec<Vec<usize>>,
    pub bic: f64,
}

/// Settings of the method that produced a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodConfig {
    Stagewise(FitConfig),
    Boosting(GbConfig),
}

/// Log-likelihood change attributed to one coefficient update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateGain {
    pub iteration: usize,
    pub parameter: usize,
    pub coef: usize,
    pub gain: f64,
}

/// Everything a fit produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: String,
    pub family: Family,
    pub config: MethodConfig,
    pub n: usize,
    /// Column names per parameter, in coefficient order.
    pub columns: Vec<Vec<String>>,
    /// Shared-matrix indices per parameter.
    pub column_index: Vec<Vec<usize>>,
    pub stats: Standardizer,
    /// Thresholds applied per parameter.
    pub kappa: Vec<f64>,
    pub init: CoefficientState,
    pub path: Vec<PathEntry>,
    pub trace: Vec<IterationRecord>,
    /// BIC path used for stopping (smoothed in batchwise mode).
    pub bic_criterion: Vec<f64>,
    pub mstop: usize,
    pub stopped_early: bool,
    pub coefficients: CoefficientState,
    pub selected: Vec<Vec<usize>>,
    pub selected_names: Vec<Vec<String>>,
    pub refit: Option<RefitResult>,
    pub levels: Option<Vec<LevelSnapshot>>,
    /// Per-update gains (gradient boosting only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gains: Vec<UpdateGain>,
    pub elapsed_fit: f64,
    pub elapsed_refit: f64,
}

impl FitResult {
    /// Coefficients used for prediction: the refit if present, else the
    /// BIC-selected iterate.
    pub fn final_state(&self) -> &CoefficientState {
        self.refit.as_ref().map_or(&self.coefficients, |r| &r.state)
    }

    /// Replays the path up to iteration `t`.
    pub fn state_at(&self, t: usize) -> CoefficientState {
        replay(&self.init, &self.path, t)
    }

    /// Predictors for a standardised covariate matrix with the training columns.
    pub fn predict_eta(&self, x: &Array2<f64>) -> Result<Vec<Vec<f64>>> {
        if x.ncols() != self.stats.names.len() {
            return Err(Error::InvalidInput(format!(
                "model expects {} covariates, got {}",
                self.stats.names.len(),
                x.ncols()
            )));
        }
        let state = self.final_state();
        Ok(state
            .beta
            .iter()
            .zip(&self.column_index)
            .map(|(b, cols)| {
                let mut e = vec![b[0]; x.nrows()];
                for (m, &j) in cols.iter().enumerate() {
                    if b[m + 1] != 0.0 {
                        e.iter_mut().zip(x.column(j)).for_each(|(ei, xi)| *ei += b[m + 1] * xi);
                    }
                }
                e
            })
            .collect())
    }

    /// Writes the coefficient path as `iteration,parameter,column,value`.
    pub fn write_path_csv<W: Write>(&self, w: W) -> Result<()> {
        let names = self.family.param_names();
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "parameter", "column", "value"])?;
        for k in 0..self.init.beta.len() {
            for (m, v) in self.init.beta[k].iter().enumerate() {
                let col = if m == 0 { "(Intercept)" } else { &self.columns[k][m - 1] };
                out.write_record([ "0", names[k], col, &fmt_f64(*v)])?;
            }
        }
        for e in &self.path {
            let col = if e.coef == 0 { "(Intercept)" } else { &self.columns[e.parameter][e.coef - 1] };
            out.write_record([&e.iteration.to_string(), names[e.parameter], col, &fmt_f64(e.value)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn replay(init: &CoefficientState, path: &[PathEntry], t: usize) -> CoefficientState {
    let mut s = init.clone();
    for e in path.iter().take_while(|e| e.iteration <= t) {
        s.beta[e.parameter][e.coef] = e.value;
    }
    s.t = t;
    s
}

/// Per-parameter names for the columns a dataset assigns.
pub(crate) fn column_names(ds: &Dataset) -> Vec<Vec<String>> {
    ds.all_columns().iter().map(|c| c.iter().map(|&j| ds.names()[j].clone()).collect()).collect()
}
