use std::time::Instant;

use rayon::prelude::*;

use super::config::{FitConfig, Kappa, UpdateMode};
use super::kernels::{self, Rows, Shift};
use super::state::{column_names, replay, CoefficientState, MethodConfig, FitResult, IterationRecord, LevelSnapshot, PathEntry, RefitResult};
use super::steps::{argmin_first, best_subset_step, bic, correlation_filter, intercept_step, kappa_auto, moving_average};
use crate::data::{make_batches, BatchSchedule, Dataset, Strata};
use crate::error::{Error, Result};
use crate::families::Family;

const REFIT_DL_TOL: f64 = 1e-6;
const REFIT_DL_RUN: usize = 25;
const REFIT_LL_RTOL: f64 = 1e-9;
const REFIT_LL_EVERY: usize = 100;
const REFIT_CAP_FACTOR: usize = 50;

/// Result of one iteration of the stagewise loop.
#[derive(Debug, Clone)]
pub(crate) struct StepOutcome {
    /// Log-likelihood on the acceptance rows at the resulting state.
    pub ll: f64,
    /// Parameters whose slope moved, `Some([])` for intercepts only.
    pub updated: Option<Vec<usize>>,
    /// Whether any parameter offered a candidate after filtering.
    pub survivors: bool,
    /// Largest unfiltered `|∂ℓ|/m` over parameters.
    pub max_dl: f64,
    /// `(parameter, coefficient, new value)`.
    pub changes: Vec<(usize, usize, f64)>,
}

/// Mutable fit state: coefficients plus running predictors on every row.
pub(crate) struct Stepper<'a> {
    family: Family,
    ds: &'a Dataset,
    pub beta: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    eps: f64,
    nu: f64,
    rho: f64,
    t_max: usize,
    masks: Vec<u32>,
}

/// Non-empty parameter subsets ordered by size, then lexicographically.
fn subset_order(k: usize, mode: UpdateMode) -> Vec<u32> {
    let mut masks: Vec<u32> = match mode {
        UpdateMode::Noncyclical => (0..k).map(|p| 1 << p).collect(),
        UpdateMode::BestSubset => (1..(1u32 << k)).collect(),
    };
    let members = |m: u32| (0..k).filter(|p| m & (1 << p) != 0).collect::<Vec<_>>();
    masks.sort_by_key(|&m| (m.count_ones(), members(m)));
    masks
}

impl<'a> Stepper<'a> {
    pub fn new(family: Family, ds: &'a Dataset, state: &CoefficientState, cfg: &FitConfig, mode: UpdateMode) -> Self {
        let eta = state.eta(ds);
        Self {
            family,
            ds,
            beta: state.beta.clone(),
            eta,
            eps: cfg.eps,
            nu: cfg.nu,
            rho: cfg.rho,
            t_max: cfg.t_max,
            masks: subset_order(family.n_params(), mode),
        }
    }

    pub fn loglik(&self, rows: Rows<'_>) -> f64 {
        let none = vec![Shift::default(); self.eta.len()];
        kernels::loglik(self.family, self.ds.y(), &self.eta, rows, &none)
    }

    pub fn df(&self) -> usize {
        self.beta.iter().map(|b| b[1..].iter().filter(|v| **v != 0.0).count()).sum()
    }

    pub fn state(&self, t: usize) -> CoefficientState {
        CoefficientState { beta: self.beta.clone(), t }
    }

    /// One iteration: intercept steps and candidate selection on `cur`,
    /// acceptance on `next`.
    pub fn step(
        &mut self,
        t: usize,
        cur: Rows<'_>,
        next: Rows<'_>,
        ll_old: Option<f64>,
        kappa: &[f64],
    ) -> Result<StepOutcome> {
        let k_n = self.beta.len();
        let y = self.ds.y();
        let g = kernels::scores(self.family, y, &self.eta, cur)?;
        let m = cur.len() as f64;
        let istep: Vec<f64> = g.iter().map(|gk| intercept_step(gk.iter().sum::<f64>() / m, self.eps)).collect();

        let mut cands = Vec::with_capacity(k_n);
        let mut max_dl: f64 = 0.0;
        for (k, gk) in g.iter().enumerate() {
            let cols: Vec<&[f64]> = self.ds.columns(k).iter().map(|&j| self.ds.col(j)).collect();
            let c = kernels::scan(&cols, gk, cur);
            if let Some(c) = c {
                max_dl = max_dl.max((c.ip / m).abs());
            }
            cands.push(c);
        }
        let kept = correlation_filter(&cands, kappa);
        let dl: Vec<f64> = kept.iter().map(|c| c.map_or(0.0, |c| c.ip / m)).collect();
        let surv: u32 = (0..k_n).filter(|&k| dl[k] != 0.0).fold(0, |a, k| a | (1 << k));

        let mut effective: Vec<u32> = Vec::new();
        for &mask in &self.masks {
            let e = mask & surv;
            if !effective.contains(&e) {
                effective.push(e);
            }
        }

        let cols: Vec<Option<&[f64]>> = (0..k_n)
            .map(|k| kept[k].map(|c| self.ds.col(self.ds.columns(k)[c.index])))
            .collect();
        let steps_for = |mask: u32| -> Vec<f64> {
            let members: Vec<usize> = (0..k_n).filter(|k| mask & (1 << k) != 0).collect();
            let sub: Vec<f64> = members.iter().map(|&k| dl[k]).collect();
            let mut full = vec![0.0; k_n];
            if !members.is_empty() {
                let s = best_subset_step(&sub, self.eps, self.nu, t, self.rho, self.t_max);
                for (&k, v) in members.iter().zip(s) {
                    full[k] = v;
                }
            }
            full
        };
        let shifts_for = |steps: &[f64]| -> Vec<Shift<'_>> {
            (0..k_n)
                .map(|k| Shift {
                    add: istep[k],
                    col: if steps[k] != 0.0 { cols[k].map(|x| (x, steps[k])) } else { None },
                })
                .collect()
        };

        let old = match ll_old {
            Some(v) => v,
            None => self.loglik(next),
        };
        let evaluated: Vec<(Vec<f64>, f64)> = effective
            .par_iter()
            .map(|&mask| {
                let steps = steps_for(mask);
                let ll = kernels::loglik(self.family, y, &self.eta, next, &shifts_for(&steps));
                (steps, ll)
            })
            .collect();
        let mut best: Option<usize> = None;
        for (i, (_, ll)) in evaluated.iter().enumerate() {
            if ll.is_nan() {
                continue;
            }
            if best.is_none_or(|b| *ll > evaluated[b].1) {
                best = Some(i);
            }
        }
        let accepted = best.filter(|&b| evaluated[b].1 > old);
        let Some(b) = accepted else {
            return Ok(StepOutcome { ll: old, updated: None, survivors: surv != 0, max_dl, changes: Vec::new() });
        };

        let (steps, ll) = &evaluated[b];
        let mut changes = Vec::new();
        let mut updated = Vec::new();
        for k in 0..k_n {
            let col = if steps[k] != 0.0 { cols[k].map(|x| (x, steps[k])) } else { None };
            if istep[k] != 0.0 || col.is_some() {
                kernels::shift_all(&mut self.eta[k], istep[k], col);
            }
            if istep[k] != 0.0 {
                self.beta[k][0] += istep[k];
                changes.push((k, 0, self.beta[k][0]));
            }
            if col.is_some() {
                let coef = kept[k].expect("survivor").index + 1;
                self.beta[k][coef] += steps[k];
                changes.push((k, coef, self.beta[k][coef]));
                updated.push(k);
            }
        }
        Ok(StepOutcome { ll: *ll, updated: Some(updated), survivors: surv != 0, max_dl, changes })
    }
}

/// Batch schedule implied by a config.
pub fn schedule_for(ds: &Dataset, cfg: &FitConfig, t_max: usize) -> Result<BatchSchedule> {
    let n = ds.n();
    match (cfg.strata, cfg.bs) {
        (Some(s), bs) => {
            let size = s.zeros + s.positives;
            if bs.is_some_and(|b| b != size) {
                return Err(Error::InvalidInput(format!("bs = {} but strata sum to {size}", bs.unwrap_or(0))));
            }
            let strata = Strata::zero_positive(ds.y(), s.zeros, s.positives, s.replace);
            make_batches(n, size, t_max, cfg.seed, Some(strata))
        }
        (None, Some(bs)) => make_batches(n, bs, t_max, cfg.seed, None),
        (None, None) => Ok(BatchSchedule::Full { n, t_max }),
    }
}

/// Thresholds per parameter for a config and batch size `m`.
pub fn resolve_kappa(cfg: &FitConfig, ds: &Dataset, m: usize) -> Vec<f64> {
    (0..ds.all_columns().len())
        .map(|k| {
            if !cfg.cf_enabled {
                return 0.0;
            }
            match cfg.kappa {
                Kappa::Fixed(v) => v,
                Kappa::Auto => {
                    let clamp = cfg.kappa_clamp.then_some((cfg.kappa_min, cfg.kappa_max));
                    kappa_auto(cfg.alpha, ds.n_cols(k), m, clamp)
                }
            }
        })
        .collect()
}

/// Intercept-only MLE on the rows of the first batch.
fn initial_state(family: Family, ds: &Dataset, schedule: &BatchSchedule) -> Result<CoefficientState> {
    let y: Vec<f64> = if schedule.is_full() {
        ds.y().to_vec()
    } else {
        schedule.batch(0).iter().map(|&i| ds.y()[i]).collect()
    };
    let b0 = family.mle_intercepts(&y)?;
    Ok(CoefficientState::from_intercepts(&b0, ds))
}

/// Caches the batch indices of the current and next iteration.
struct BatchCursor<'s> {
    schedule: &'s BatchSchedule,
    cur: Vec<usize>,
    next: Vec<usize>,
    t: usize,
}

impl<'s> BatchCursor<'s> {
    fn new(schedule: &'s BatchSchedule) -> Self {
        Self { schedule, cur: Vec::new(), next: Vec::new(), t: usize::MAX }
    }

    /// Batches for iteration `t` (1-based): `i_t` and `i_{t+1}`, wrapping to
    /// `i_1` after the last batch.
    fn at(&mut self, t: usize) -> (Rows<'_>, Rows<'_>) {
        if let BatchSchedule::Full { n, .. } = self.schedule {
            return (Rows::All(*n), Rows::All(*n));
        }
        let len = self.schedule.len();
        if self.t.checked_add(1) == Some(t) {
            std::mem::swap(&mut self.cur, &mut self.next);
        } else {
            self.cur = self.schedule.batch((t - 1) % len);
        }
        self.next = self.schedule.batch(t % len);
        self.t = t;
        (Rows::Idx(&self.cur), Rows::Idx(&self.next))
    }
}

struct LoopOutput {
    path: Vec<PathEntry>,
    trace: Vec<IterationRecord>,
    stopped_early: bool,
    state: CoefficientState,
}

/// Runs iterations `t_from..=t_to` with per-iteration thresholds from `kappa_at`.
#[allow(clippy::too_many_arguments)]
fn run_segment(
    stepper: &mut Stepper<'_>,
    cursor: &mut BatchCursor<'_>,
    t_from: usize,
    t_to: usize,
    kappa: &[f64],
    patience: Option<usize>,
    out: &mut LoopOutput,
    cache: &mut Option<f64>,
) -> Result<()> {
    let n = stepper.ds.n();
    let full = cursor.schedule.is_full();
    let scale = if full { 1.0 } else { n as f64 / cursor.schedule.batch_size() as f64 };
    let mut idle = 0;
    for t in t_from..=t_to {
        let (cur, next) = cursor.at(t);
        let o = stepper.step(t, cur, next, if full { *cache } else { None }, kappa)?;
        if o.updated.is_some() && !o.ll.is_finite() {
            return Err(Error::NonFinite { what: "log-likelihood", location: format!("iteration {t}") });
        }
        *cache = Some(o.ll);
        for &(parameter, coef, value) in &o.changes {
            out.path.push(PathEntry { iteration: t, parameter, coef, value });
        }
        let df = stepper.df();
        let ll = o.ll * scale;
        out.trace.push(IterationRecord { t, loglik: ll, df, bic: bic(ll, df, n), updated: o.updated });
        idle = if o.survivors { 0 } else { idle + 1 };
        if patience.is_some_and(|p| idle >= p) {
            out.stopped_early = true;
            break;
        }
    }
    out.state = stepper.state(out.trace.last().map_or(0, |r| r.t));
    Ok(())
}

/// Stagewise boosting with semi-constant steps, (best-)subset updating,
/// correlation filtering and BIC early stopping.
pub fn sbdr_fit(family: Family, ds: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let schedule = schedule_for(ds, cfg, cfg.t_max)?;
    sbdr_fit_with_schedule(family, ds, cfg, &schedule)
}

/// [`sbdr_fit`] on an explicit batch schedule.
pub fn sbdr_fit_with_schedule(family: Family, ds: &Dataset, cfg: &FitConfig, schedule: &BatchSchedule) -> Result<FitResult> {
    cfg.validate()?;
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty batch schedule".into()));
    }
    let start = Instant::now();
    let n = ds.n();
    let full = schedule.is_full();
    let kappa = resolve_kappa(cfg, ds, schedule.batch_size());
    let init = initial_state(family, ds, schedule)?;
    let mut stepper = Stepper::new(family, ds, &init, cfg, cfg.update_mode);
    let mut cursor = BatchCursor::new(schedule);

    let ll0 = if full {
        stepper.loglik(Rows::All(n))
    } else {
        let b = schedule.batch(0);
        stepper.loglik(Rows::Idx(&b)) * n as f64 / b.len() as f64
    };
    if !ll0.is_finite() {
        return Err(Error::NonFinite { what: "log-likelihood", location: "initial state".into() });
    }
    let mut out = LoopOutput {
        path: Vec::new(),
        trace: vec![IterationRecord { t: 0, loglik: ll0, df: 0, bic: bic(ll0, 0, n), updated: None }],
        stopped_early: false,
        state: init.clone(),
    };
    let mut cache = full.then_some(ll0);
    let t_end = schedule.len().min(cfg.t_max);
    run_segment(&mut stepper, &mut cursor, 1, t_end, &kappa, Some(cfg.patience), &mut out, &mut cache)?;

    let bics: Vec<f64> = out.trace.iter().map(|r| r.bic).collect();
    let criterion = if full { bics } else { moving_average(&bics, cfg.bic_ma_window) };
    let mstop = out.trace[argmin_first(&criterion)].t;
    let coefficients = replay(&init, &out.path, mstop);
    coefficients.check_finite()?;
    let selected = coefficients.selected(ds.all_columns());
    let elapsed_fit = start.elapsed().as_secs_f64();

    let refit_start = Instant::now();
    let refit = if cfg.refit {
        Some(refit_from(family, ds, &selected, cfg, Some((&coefficients, ds.all_columns())), schedule)?)
    } else {
        None
    };
    let method = method_name(cfg, full);
    Ok(FitResult {
        method,
        family,
        config: MethodConfig::Stagewise(cfg.clone()),
        n,
        columns: column_names(ds),
        column_index: ds.all_columns().to_vec(),
        stats: ds.stats().clone(),
        kappa,
        init,
        path: out.path,
        trace: out.trace,
        bic_criterion: criterion,
        mstop,
        stopped_early: out.stopped_early,
        selected_names: names_of(ds, &selected),
        selected,
        coefficients,
        refit,
        levels: None,
        gains: Vec::new(),
        elapsed_fit,
        elapsed_refit: refit_start.elapsed().as_secs_f64(),
    })
}

fn method_name(cfg: &FitConfig, full: bool) -> String {
    let mut parts = Vec::new();
    if !full {
        parts.push("BW");
    }
    if cfg.update_mode == UpdateMode::BestSubset {
        parts.push("BS");
    }
    if cfg.cf_enabled {
        parts.push("CF");
    }
    if parts.is_empty() {
        "Standard".into()
    } else {
        parts.join("+")
    }
}

fn names_of(ds: &Dataset, sets: &[Vec<usize>]) -> Vec<Vec<String>> {
    sets.iter().map(|s| s.iter().map(|&j| ds.names()[j].clone()).collect()).collect()
}

/// Boosts the columns in `selected` (shared-matrix indices per parameter) to
/// convergence without correlation filtering, starting from intercept MLEs.
pub fn refit(family: Family, ds: &Dataset, selected: &[Vec<usize>], cfg: &FitConfig) -> Result<RefitResult> {
    cfg.validate()?;
    let schedule = schedule_for(ds, cfg, cfg.t_max)?;
    refit_from(family, ds, selected, cfg, None, &schedule)
}

fn refit_from(
    family: Family,
    ds: &Dataset,
    selected: &[Vec<usize>],
    cfg: &FitConfig,
    start: Option<(&CoefficientState, &[Vec<usize>])>,
    schedule: &BatchSchedule,
) -> Result<RefitResult> {
    let n = ds.n();
    if selected.len() != family.n_params() {
        return Err(Error::InvalidInput("one selection set per parameter required".into()));
    }
    for (k, sel) in selected.iter().enumerate() {
        if let Some(j) = sel.iter().find(|j| !ds.columns(k).contains(j)) {
            return Err(Error::InvalidInput(format!("column {j} is not offered to parameter {k}")));
        }
    }
    let sub = ds.restrict_columns(selected.to_vec());
    let base = initial_state(family, &sub, schedule)?;
    let full_ll = |s: &CoefficientState| -> f64 {
        let st = Stepper::new(family, &sub, s, cfg, UpdateMode::BestSubset);
        st.loglik(Rows::All(n))
    };
    if selected.iter().all(Vec::is_empty) {
        let ll = full_ll(&base);
        let state = expand(&base, selected, ds.all_columns());
        return Ok(RefitResult { bic: bic(ll, 0, n), state, converged: true, iterations: 0, loglik: ll });
    }
    let mut init = base;
    if let Some((s, cols)) = start {
        for k in 0..init.beta.len() {
            init.beta[k][0] = s.beta[k][0];
            for (m, j) in selected[k].iter().enumerate() {
                if let Some(p) = cols[k].iter().position(|c| c == j) {
                    init.beta[k][m + 1] = s.beta[k][p + 1];
                }
            }
        }
    }
    let cap = REFIT_CAP_FACTOR * cfg.t_max;
    let long;
    let schedule = match schedule {
        BatchSchedule::Full { .. } => schedule,
        BatchSchedule::Random { n, bs, seed, strata, .. } => {
            long = BatchSchedule::Random { n: *n, bs: *bs, t_max: cap, seed: *seed, strata: strata.clone() };
            &long
        }
        BatchSchedule::Fixed(_) => schedule,
    };
    let full = schedule.is_full();
    let kappa = vec![0.0; family.n_params()];
    let mut stepper = Stepper::new(family, &sub, &init, cfg, UpdateMode::BestSubset);
    let mut cursor = BatchCursor::new(schedule);
    let mut cache = full.then(|| stepper.loglik(Rows::All(n)));
    let mut small = 0;
    let mut checkpoint = full_ll(&init);
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=cap {
        let (cur, next) = cursor.at(t);
        let o = stepper.step(t, cur, next, if full { cache } else { None }, &kappa)?;
        if o.updated.is_some() && !o.ll.is_finite() {
            return Err(Error::NonFinite { what: "log-likelihood", location: format!("refit iteration {t}") });
        }
        cache = Some(o.ll);
        iterations = t;
        small = if o.max_dl < REFIT_DL_TOL { small + 1 } else { 0 };
        if small >= REFIT_DL_RUN {
            converged = true;
            break;
        }
        if t % REFIT_LL_EVERY == 0 {
            let ll = if full { o.ll } else { stepper.loglik(Rows::All(n)) };
            if ((ll - checkpoint) / checkpoint.abs().max(f64::MIN_POSITIVE)).abs() < REFIT_LL_RTOL {
                converged = true;
                break;
            }
            checkpoint = ll;
        }
    }
    let sub_state = stepper.state(iterations);
    sub_state.check_finite()?;
    let ll = stepper.loglik(Rows::All(n));
    let df = stepper.df();
    let state = expand(&sub_state, selected, ds.all_columns());
    Ok(RefitResult { state, converged, iterations, loglik: ll, bic: bic(ll, df, n) })
}

/// Maps coefficients on `selected` back onto the full per-parameter layout.
fn expand(sub: &CoefficientState, selected: &[Vec<usize>], cols: &[Vec<usize>]) -> CoefficientState {
    let beta = sub
        .beta
        .iter()
        .zip(selected)
        .zip(cols)
        .map(|((b, sel), all)| {
            let mut out = vec![0.0; all.len() + 1];
            out[0] = b[0];
            for (m, j) in sel.iter().enumerate() {
                let p = all.iter().position(|c| c == j).expect("selected column belongs to the parameter");
                out[p + 1] = b[m + 1];
            }
            out
        })
        .collect();
    CoefficientState { beta, t: sub.t }
}

/// Threshold levels `start, start − step, …, 0`.
pub fn threshold_levels(kappa_start: f64, kappa_step: f64) -> Vec<f64> {
    let mut levels = vec![kappa_start];
    if kappa_step > 0.0 {
        let mut i = 1;
        loop {
            let k = kappa_start - i as f64 * kappa_step;
            if k <= 1e-12 {
                break;
            }
            levels.push(k);
            i += 1;
        }
    }
    if kappa_start > 0.0 {
        levels.push(0.0);
    }
    levels
}

/// Boosts under a descending threshold grid, refits the variable set found
/// at each level and returns the one with the lowest full-data BIC.
pub fn threshold_descent(
    family: Family,
    ds: &Dataset,
    cfg: &FitConfig,
    kappa_start: f64,
    kappa_step: f64,
    iters_per_level: usize,
) -> Result<FitResult> {
    if !(kappa_start > 0.0) {
        return Err(Error::InvalidInput("kappa_start must be positive".into()));
    }
    if iters_per_level == 0 {
        return Err(Error::InvalidInput("iters_per_level must be positive".into()));
    }
    let levels = threshold_levels(kappa_start, kappa_step);
    let total = levels.len() * iters_per_level;
    let run_cfg = FitConfig { t_max: total, ..cfg.clone() };
    run_cfg.validate()?;
    let start = Instant::now();
    let n = ds.n();
    let schedule = schedule_for(ds, &run_cfg, total)?;
    let full = schedule.is_full();
    let init = initial_state(family, ds, &schedule)?;
    let mut stepper = Stepper::new(family, ds, &init, &run_cfg, cfg.update_mode);
    let mut cursor = BatchCursor::new(&schedule);
    let ll0 = if full {
        stepper.loglik(Rows::All(n))
    } else {
        let b = schedule.batch(0);
        stepper.loglik(Rows::Idx(&b)) * n as f64 / b.len() as f64
    };
    let mut out = LoopOutput {
        path: Vec::new(),
        trace: vec![IterationRecord { t: 0, loglik: ll0, df: 0, bic: bic(ll0, 0, n), updated: None }],
        stopped_early: false,
        state: init.clone(),
    };
    let mut cache = full.then_some(ll0);
    let mut snaps: Vec<(f64, usize, Vec<Vec<usize>>)> = Vec::new();
    for (l, &kappa) in levels.iter().enumerate() {
        let kv = vec![kappa; family.n_params()];
        let (a, b) = (l * iters_per_level + 1, (l + 1) * iters_per_level);
        run_segment(&mut stepper, &mut cursor, a, b, &kv, None, &mut out, &mut cache)?;
        let sel = stepper.state(b).selected(ds.all_columns());
        snaps.push((kappa, b, sel));
    }
    let elapsed_fit = start.elapsed().as_secs_f64();

    let refit_start = Instant::now();
    let mut refits: Vec<(Vec<Vec<usize>>, RefitResult)> = Vec::new();
    let mut level_info = Vec::new();
    for (kappa, iteration, sel) in &snaps {
        let r = match refits.iter().find(|(s, _)| s == sel) {
            Some((_, r)) => r.clone(),
            None => {
                let st = replay(&init, &out.path, *iteration);
                let r = refit_from(family, ds, sel, cfg, Some((&st, ds.all_columns())), &schedule)?;
                refits.push((sel.clone(), r.clone()));
                r
            }
        };
        level_info.push(LevelSnapshot { kappa: *kappa, iteration: *iteration, selected: sel.clone(), bic: r.bic });
    }
    let bics: Vec<f64> = level_info.iter().map(|l| l.bic).collect();
    let win = argmin_first(&bics);
    let chosen = &level_info[win];
    let refit = refits.iter().find(|(s, _)| *s == chosen.selected).map(|(_, r)| r.clone());
    let coefficients = replay(&init, &out.path, chosen.iteration);
    let selected = chosen.selected.clone();
    let mstop = chosen.iteration;
    let criterion: Vec<f64> = out.trace.iter().map(|r| r.bic).collect();
    Ok(FitResult {
        method: if full { "ThresDesc".into() } else { "ThresDesc+BW".into() },
        family,
        config: MethodConfig::Stagewise(run_cfg),
        n,
        columns: column_names(ds),
        column_index: ds.all_columns().to_vec(),
        stats: ds.stats().clone(),
        kappa: vec![kappa_start; family.n_params()],
        init,
        path: out.path,
        trace: out.trace,
        bic_criterion: criterion,
        mstop,
        stopped_early: false,
        selected_names: names_of(ds, &selected),
        selected,
        coefficients,
        refit,
        levels: Some(level_info),
        gains: Vec::new(),
        elapsed_fit,
        elapsed_refit: refit_start.elapsed().as_secs_f64(),
    })
}
