//! Gradient-boosting baselines: cyclical and non-cyclical component-wise
//! boosting with least-squares base learners, cross-validated stopping and
//! variable deselection.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::engine::{
    argmin_first, bic, column_names, loglik_rows, replay, scores, shift_all, CoefficientState, FitResult,
    IterationRecord, MethodConfig, PathEntry, Rows, Shift, UpdateGain,
};
use crate::error::{Error, Result};
use crate::families::Family;

/// How parameters are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GbMode {
    /// Every parameter in turn, with refreshed gradients.
    Cyclical,
    /// Only the parameter whose tentative update gains most.
    #[default]
    Noncyclical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbConfig {
    /// Step factor applied to the least-squares coefficient.
    pub eps: f64,
    #[serde(rename = "T")]
    pub t_max: usize,
    pub mode: GbMode,
    pub folds: usize,
    /// Minimum share of the risk reduction a variable must carry to survive
    /// deselection.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for GbConfig {
    fn default() -> Self {
        Self { eps: 0.1, t_max: 1000, mode: GbMode::Noncyclical, folds: 10, threshold: 0.01, seed: 0 }
    }
}

impl GbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidInput("eps must be non-negative".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidInput("need at least two folds".into()));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::InvalidInput("threshold must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Cross-validated stopping iteration and the mean held-out risk path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mstop: usize,
    /// Mean held-out negative log-likelihood per observation, iterations `0..=T`.
    pub risk: Vec<f64>,
}

/// Variable deselection outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDesResult {
    /// Kept columns per parameter (shared-matrix indices).
    pub selected: Vec<Vec<usize>>,
    /// `(parameter, column, share)` for every variable updated up to `mstop`.
    pub shares: Vec<(usize, usize, f64)>,
    pub fit: FitResult,
}

struct Learner<'a> {
    family: Family,
    ds: &'a Dataset,
    beta: Vec<Vec<f64>>,
    eta: Vec<Vec<f64>>,
    xx: Vec<Vec<f64>>,
    eps: f64,
}

/// Chosen base learner: coefficient slot and least-squares coefficient.
#[derive(Clone, Copy)]
struct Pick {
    coef: usize,
    c: f64,
}

impl<'a> Learner<'a> {
    fn new(family: Family, ds: &'a Dataset, state: &CoefficientState, eps: f64) -> Self {
        let xx = (0..family.n_params())
            .map(|k| ds.columns(k).iter().map(|&j| ds.col(j).iter().map(|v| v * v).sum()).collect())
            .collect();
        Self { family, ds, beta: state.beta.clone(), eta: state.eta(ds), xx, eps }
    }

    fn n(&self) -> usize {
        self.ds.n()
    }

    fn loglik(&self, shift: &[Shift<'_>]) -> f64 {
        loglik_rows(self.family, self.ds.y(), &self.eta, Rows::All(self.n()), shift)
    }

    /// Least-squares fit of every base learner (intercept included) to `g`,
    /// keeping the one with the smallest residual sum of squares.
    fn pick(&self, k: usize, g: &[f64]) -> Pick {
        let n = self.n() as f64;
        let cols = self.ds.columns(k);
        let ips: Vec<f64> = if cols.len() * g.len() >= 1 << 16 {
            cols.par_iter().map(|&j| dot(self.ds.col(j), g)).collect()
        } else {
            cols.iter().map(|&j| dot(self.ds.col(j), g)).collect()
        };
        let s0 = g.iter().sum::<f64>();
        let mut best = Pick { coef: 0, c: s0 / n };
        let mut best_red = s0 * s0 / n;
        for (m, ip) in ips.into_iter().enumerate() {
            let xx = self.xx[k][m];
            let red = ip * ip / xx;
            if red > best_red {
                best_red = red;
                best = Pick { coef: m + 1, c: ip / xx };
            }
        }
        best
    }

    fn shift_for(&self, k: usize, p: Pick) -> Vec<Shift<'a>> {
        let mut s = vec![Shift::default(); self.beta.len()];
        let step = self.eps * p.c;
        if p.coef == 0 {
            s[k].add = step;
        } else {
            s[k].col = Some((self.ds.col(self.ds.columns(k)[p.coef - 1]), step));
        }
        s
    }

    fn commit(&mut self, k: usize, p: Pick) -> f64 {
        let step = self.eps * p.c;
        if p.coef == 0 {
            shift_all(&mut self.eta[k], step, None);
        } else {
            let x = self.ds.col(self.ds.columns(k)[p.coef - 1]);
            shift_all(&mut self.eta[k], 0.0, Some((x, step)));
        }
        self.beta[k][p.coef] += step;
        self.beta[k][p.coef]
    }

    fn df(&self) -> usize {
        self.beta.iter().map(|b| b[1..].iter().filter(|v| **v != 0.0).count()).sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Held-out rows whose predictors follow the training updates.
struct Holdout<'a> {
    ds: &'a Dataset,
    eta: Vec<Vec<f64>>,
}

impl Holdout<'_> {
    fn apply(&mut self, k: usize, coef: usize, step: f64, train: &Dataset) {
        if coef == 0 {
            shift_all(&mut self.eta[k], step, None);
        } else {
            let j = train.columns(k)[coef - 1];
            shift_all(&mut self.eta[k], 0.0, Some((self.ds.col(j), step)));
        }
    }

    fn mean_nll(&self, family: Family) -> f64 {
        let none = vec![Shift::default(); self.eta.len()];
        -loglik_rows(family, self.ds.y(), &self.eta, Rows::All(self.ds.n()), &none) / self.ds.n() as f64
    }
}

struct GbRun {
    init: CoefficientState,
    path: Vec<PathEntry>,
    trace: Vec<IterationRecord>,
    gains: Vec<UpdateGain>,
    holdout_risk: Vec<f64>,
}

fn run(family: Family, ds: &Dataset, cfg: &GbConfig, t_max: usize, mut holdout: Option<Holdout<'_>>) -> Result<GbRun> {
    let init = CoefficientState::from_intercepts(&family.mle_intercepts(ds.y())?, ds);
    let mut lr = Learner::new(family, ds, &init, cfg.eps);
    let n = ds.n();
    let none = vec![Shift::default(); family.n_params()];
    let mut ll = lr.loglik(&none);
    if !ll.is_finite() {
        return Err(Error::NonFinite { what: "log-likelihood", location: "initial state".into() });
    }
    let mut out = GbRun {
        init: init.clone(),
        path: Vec::new(),
        trace: vec![IterationRecord { t: 0, loglik: ll, df: 0, bic: bic(ll, 0, n), updated: None }],
        gains: Vec::new(),
        holdout_risk: Vec::new(),
    };
    if let Some(h) = &holdout {
        out.holdout_risk.push(h.mean_nll(family));
    }
    for t in 1..=t_max {
        let mut touched = Vec::new();
        match cfg.mode {
            GbMode::Noncyclical => {
                let g = scores(family, ds.y(), &lr.eta, Rows::All(n))?;
                let picks: Vec<Pick> = (0..g.len()).map(|k| lr.pick(k, &g[k])).collect();
                let lls: Vec<f64> = picks.iter().enumerate().map(|(k, &p)| lr.loglik(&lr.shift_for(k, p))).collect();
                let mut k_best = 0;
                for k in 1..lls.len() {
                    if lls[k] > lls[k_best] || lls[k_best].is_nan() {
                        k_best = k;
                    }
                }
                let p = picks[k_best];
                let value = lr.commit(k_best, p);
                if let Some(h) = holdout.as_mut() {
                    h.apply(k_best, p.coef, cfg.eps * p.c, ds);
                }
                out.path.push(PathEntry { iteration: t, parameter: k_best, coef: p.coef, value });
                out.gains.push(UpdateGain { iteration: t, parameter: k_best, coef: p.coef, gain: lls[k_best] - ll });
                ll = lls[k_best];
                touched.push(k_best);
            }
            GbMode::Cyclical => {
                for k in 0..family.n_params() {
                    let g = scores(family, ds.y(), &lr.eta, Rows::All(n))?;
                    let p = lr.pick(k, &g[k]);
                    let value = lr.commit(k, p);
                    if let Some(h) = holdout.as_mut() {
                        h.apply(k, p.coef, cfg.eps * p.c, ds);
                    }
                    let new = lr.loglik(&none);
                    out.path.push(PathEntry { iteration: t, parameter: k, coef: p.coef, value });
                    out.gains.push(UpdateGain { iteration: t, parameter: k, coef: p.coef, gain: new - ll });
                    ll = new;
                    touched.push(k);
                }
            }
        }
        if !ll.is_finite() {
            return Err(Error::NonFinite { what: "log-likelihood", location: format!("iteration {t}") });
        }
        let df = lr.df();
        out.trace.push(IterationRecord { t, loglik: ll, df, bic: bic(ll, df, n), updated: Some(touched) });
        if let Some(h) = &holdout {
            out.holdout_risk.push(h.mean_nll(family));
        }
    }
    Ok(out)
}

fn assemble(
    family: Family,
    ds: &Dataset,
    cfg: &GbConfig,
    r: GbRun,
    mstop: usize,
    method: &str,
    elapsed: f64,
) -> Result<FitResult> {
    let coefficients = replay(&r.init, &r.path, mstop);
    coefficients.check_finite()?;
    let selected = coefficients.selected(ds.all_columns());
    let selected_names = selected.iter().map(|s| s.iter().map(|&j| ds.names()[j].clone()).collect()).collect();
    Ok(FitResult {
        method: method.into(),
        family,
        config: MethodConfig::Boosting(cfg.clone()),
        n: ds.n(),
        columns: column_names(ds),
        column_index: ds.all_columns().to_vec(),
        stats: ds.stats().clone(),
        kappa: vec![0.0; family.n_params()],
        init: r.init,
        path: r.path,
        bic_criterion: r.trace.iter().map(|x| x.bic).collect(),
        trace: r.trace,
        mstop,
        stopped_early: false,
        coefficients,
        selected,
        selected_names,
        refit: None,
        levels: None,
        gains: r.gains,
        elapsed_fit: elapsed,
        elapsed_refit: 0.0,
    })
}

/// Component-wise gradient boosting for `T` iterations. The returned
/// coefficients are those after the last iteration (`mstop = T`).
pub fn gb_fit(family: Family, ds: &Dataset, cfg: &GbConfig) -> Result<FitResult> {
    cfg.validate()?;
    let start = Instant::now();
    let r = run(family, ds, cfg, cfg.t_max, None)?;
    assemble(family, ds, cfg, r, cfg.t_max, "GB", start.elapsed().as_secs_f64())
}

/// Stopping iteration minimising the mean held-out negative log-likelihood
/// over `folds` contiguous blocks of a seeded permutation.
pub fn cv_mstop(family: Family, ds: &Dataset, cfg: &GbConfig) -> Result<CvResult> {
    cfg.validate()?;
    let n = ds.n();
    if cfg.folds > n {
        return Err(Error::InvalidInput(format!("{} folds for {n} rows", cfg.folds)));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let bounds: Vec<(usize, usize)> = (0..cfg.folds).map(|f| (f * n / cfg.folds, (f + 1) * n / cfg.folds)).collect();
    let paths: Vec<Vec<f64>> = bounds
        .par_iter()
        .map(|&(a, b)| {
            let mut test: Vec<usize> = perm[a..b].to_vec();
            test.sort_unstable();
            let mut mask = vec![false; n];
            test.iter().for_each(|&i| mask[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
            let tr = ds.subset_rows(&train);
            let te = ds.subset_rows(&test);
            let init = CoefficientState::from_intercepts(&family.mle_intercepts(tr.y())?, &tr);
            let hold = Holdout { eta: init.eta(&te), ds: &te };
            Ok(run(family, &tr, cfg, cfg.t_max, Some(hold))?.holdout_risk)
        })
        .collect::<Result<_>>()?;
    let risk: Vec<f64> = (0..=cfg.t_max)
        .map(|t| paths.iter().map(|p| p[t]).sum::<f64>() / cfg.folds as f64)
        .collect();
    Ok(CvResult { mstop: argmin_first(&risk), risk })
}

/// Gradient boosting stopped at the cross-validated iteration.
pub fn gb_fit_cv(family: Family, ds: &Dataset, cfg: &GbConfig) -> Result<(FitResult, CvResult)> {
    let start = Instant::now();
    let cv = cv_mstop(family, ds, cfg)?;
    let r = run(family, ds, cfg, cfg.t_max, None)?;
    let fit = assemble(family, ds, cfg, r, cv.mstop, "GB", start.elapsed().as_secs_f64())?;
    Ok((fit, cv))
}

/// Drops variables whose share of the log-likelihood gain up to `fit.mstop`
/// is below `threshold`, then reboosts the survivors for `mstop` iterations.
/// With `threshold == 0` every variable updated at least once survives.
pub fn var_deselect(family: Family, ds: &Dataset, fit: &FitResult, threshold: f64) -> Result<VarDesResult> {
    let MethodConfig::Boosting(cfg) = &fit.config else {
        return Err(Error::InvalidInput("variable deselection needs a gradient-boosting fit".into()));
    };
    if fit.gains.is_empty() && fit.mstop > 0 {
        return Err(Error::InvalidInput("fit carries no recorded gains".into()));
    }
    let start = Instant::now();
    let upto: Vec<&UpdateGain> = fit.gains.iter().filter(|g| g.iteration <= fit.mstop).collect();
    let total: f64 = upto.iter().map(|g| g.gain).sum();
    let mut per: Vec<(usize, usize, f64)> = Vec::new();
    for g in upto.iter().filter(|g| g.coef > 0) {
        let j = fit.column_index[g.parameter][g.coef - 1];
        match per.iter_mut().find(|(k, c, _)| *k == g.parameter && *c == j) {
            Some(e) => e.2 += g.gain,
            None => per.push((g.parameter, j, g.gain)),
        }
    }
    per.sort_by_key(|&(k, j, _)| (k, j));
    let shares: Vec<(usize, usize, f64)> =
        per.iter().map(|&(k, j, g)| (k, j, if total != 0.0 { g / total } else { 0.0 })).collect();
    let mut selected = vec![Vec::new(); family.n_params()];
    for &(k, j, s) in &shares {
        if threshold <= 0.0 || s >= threshold {
            selected[k].push(j);
        }
    }
    let sub = ds.restrict_columns(selected.clone());
    let r = run(family, &sub, cfg, fit.mstop, None)?;
    let mut refit = assemble(family, &sub, cfg, r, fit.mstop, "VarDes", start.elapsed().as_secs_f64())?;
    refit.elapsed_fit += fit.elapsed_fit;
    Ok(VarDesResult { selected, shares, fit: refit })
}
