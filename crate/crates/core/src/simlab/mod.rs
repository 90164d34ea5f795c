//! Simulation harness: scenario specs, method runners, out-of-sample
//! metrics and replicated runs.

mod design;

pub use design::{ar1, gen_covariates, gen_response, CovariateDesign, SimData, Truth};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{gb_fit_cv, var_deselect, GbConfig};
use crate::data::Dataset;
use crate::engine::{fmt_f64, sbdr_fit, threshold_descent, FitConfig, FitResult, UpdateMode};
use crate::error::{Error, Result};
use crate::families::{Family, DEFAULT_CRPS_DRAWS};

/// Methods compared in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Standard,
    Bs,
    Cf,
    BsCf,
    Bw,
    BwBs,
    BwCf,
    BwBsCf,
    ThresDesc,
    ThresDescBw,
    Gb,
    VarDes,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::Standard,
        Method::Bs,
        Method::Cf,
        Method::BsCf,
        Method::Bw,
        Method::BwBs,
        Method::BwCf,
        Method::BwBsCf,
        Method::ThresDesc,
        Method::ThresDescBw,
        Method::Gb,
        Method::VarDes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Standard => "Standard",
            Method::Bs => "BS",
            Method::Cf => "CF",
            Method::BsCf => "BS+CF",
            Method::Bw => "BW",
            Method::BwBs => "BW+BS",
            Method::BwCf => "BW+CF",
            Method::BwBsCf => "BW+BS+CF",
            Method::ThresDesc => "ThresDesc",
            Method::ThresDescBw => "ThresDesc+BW",
            Method::Gb => "GB",
            Method::VarDes => "VarDes",
        }
    }

    /// `(batchwise, best_subset, filtered)` for the stagewise variants.
    fn flags(self) -> Option<(bool, bool, bool)> {
        Some(match self {
            Method::Standard => (false, false, false),
            Method::Bs => (false, true, false),
            Method::Cf => (false, false, true),
            Method::BsCf => (false, true, true),
            Method::Bw => (true, false, false),
            Method::BwBs => (true, true, false),
            Method::BwCf => (true, false, true),
            Method::BwBsCf => (true, true, true),
            _ => return None,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

/// Descending threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresDescConfig {
    pub kappa_start: f64,
    pub kappa_step: f64,
    pub iters_per_level: usize,
}

impl Default for ThresDescConfig {
    fn default() -> Self {
        Self { kappa_start: 0.19, kappa_step: 0.02, iters_per_level: 200 }
    }
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub family: Family,
    pub nobs: usize,
    pub nnoise: usize,
    pub rho_corr: f64,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Validation rows per replication.
    pub n_valid: usize,
    /// Base configuration for the stagewise methods; the method decides the
    /// update mode, filtering and batching.
    pub fit: FitConfig,
    pub gb: GbConfig,
    pub thresdesc: ThresDescConfig,
    /// Batch size for batchwise methods; `None` uses [`default_batch_size`].
    pub bs: Option<usize>,
    pub crps_draws: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            family: Family::Normal,
            nobs: 1000,
            nnoise: 30,
            rho_corr: 0.0,
            reps: 1,
            methods: vec![Method::BsCf, Method::Gb],
            seed: 0,
            n_valid: 10_000,
            fit: FitConfig { kappa_clamp: true, ..FitConfig::default() },
            gb: GbConfig::default(),
            thresdesc: ThresDescConfig::default(),
            bs: None,
            crps_draws: DEFAULT_CRPS_DRAWS,
        }
    }
}

/// A quarter of the data, at least 250 rows (or all of them) and at most 10000.
pub fn default_batch_size(n: usize) -> usize {
    (n / 4).max(n.min(250)).min(10_000)
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.nobs < 10 {
            return bad(format!("nobs must be at least 10, got {}", self.nobs));
        }
        if !(0.0..1.0).contains(&self.rho_corr) {
            return bad(format!("rho_corr must lie in [0, 1), got {}", self.rho_corr));
        }
        if self.reps == 0 {
            return bad("reps must be positive".into());
        }
        if self.methods.is_empty() {
            return bad("no methods given".into());
        }
        if self.n_valid == 0 {
            return bad("n_valid must be positive".into());
        }
        if self.crps_draws < 2 {
            return bad("crps_draws must be at least 2".into());
        }
        if let Some(bs) = self.bs {
            if bs == 0 || bs > self.nobs {
                return bad(format!("bs must lie in 1..={}, got {bs}", self.nobs));
            }
        }
        Truth::standard(self.family)?;
        self.fit.validate()?;
        self.gb.validate()
    }

    /// Covariates per replication.
    pub fn ncols(&self) -> usize {
        6 + self.nnoise
    }

    fn stagewise_config(&self, batchwise: bool, best_subset: bool, filtered: bool, seed: u64) -> FitConfig {
        FitConfig {
            update_mode: if best_subset { UpdateMode::BestSubset } else { UpdateMode::Noncyclical },
            cf_enabled: filtered,
            bs: batchwise.then(|| self.bs.unwrap_or_else(|| default_batch_size(self.nobs))),
            strata: None,
            seed,
            ..self.fit.clone()
        }
    }

    /// Fits `method` to `ds`.
    pub fn fit_method(&self, method: Method, ds: &Dataset, seed: u64) -> Result<FitResult> {
        let family = self.family;
        if let Some((bw, bs, cf)) = method.flags() {
            return sbdr_fit(family, ds, &self.stagewise_config(bw, bs, cf, seed));
        }
        let td = &self.thresdesc;
        let gb = GbConfig { seed, ..self.gb.clone() };
        match method {
            Method::ThresDesc | Method::ThresDescBw => {
                let cfg = self.stagewise_config(method == Method::ThresDescBw, true, true, seed);
                threshold_descent(family, ds, &cfg, td.kappa_start, td.kappa_step, td.iters_per_level)
            }
            Method::Gb => Ok(gb_fit_cv(family, ds, &gb)?.0),
            Method::VarDes => {
                let (fit, _) = gb_fit_cv(family, ds, &gb)?;
                Ok(var_deselect(family, ds, &fit, gb.threshold)?.fit)
            }
            _ => unreachable!("stagewise methods handled above"),
        }
    }
}

/// Out-of-sample quality of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub crps: f64,
    /// Root mean squared predictor error per parameter.
    pub rmse: Vec<f64>,
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
}

const CRPS_BLOCK: usize = 1024;

/// Scores `fit` on validation data drawn from `truth`. Selection counts
/// compare the nonzero slopes of the final coefficients with the true
/// effects; CRPS draws come from `seed`.
pub fn evaluate(fit: &FitResult, truth: &Truth, val: &SimData, crps_draws: usize, seed: u64) -> Result<Evaluation> {
    let family = truth.family;
    if fit.family != family {
        return Err(Error::InvalidInput(format!("fit is {}, truth is {}", fit.family.id(), family.id())));
    }
    let x = fit.stats.transform(val.raw.view())?;
    let eta = fit.predict_eta(&x)?;
    let n = val.n();
    let rmse = eta
        .iter()
        .zip(&val.eta)
        .map(|(a, b)| (a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() / n as f64).sqrt())
        .collect();
    let blocks: Vec<f64> = (0..n.div_ceil(CRPS_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut e = vec![0.0; eta.len()];
            let mut acc = 0.0;
            for i in b * CRPS_BLOCK..((b + 1) * CRPS_BLOCK).min(n) {
                e.iter_mut().zip(&eta).for_each(|(v, c)| *v = c[i]);
                acc += family.crps_with_draws(&family.to_theta(&e), val.y[i], crps_draws, &mut rng)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let crps = blocks.iter().sum::<f64>() / n as f64;
    let active = truth.active();
    let selected = fit.final_state().selected(&fit.column_index);
    let tp = selected.iter().zip(&active).map(|(s, a)| s.iter().filter(|j| a.contains(j)).count()).collect();
    let fp = selected.iter().zip(&active).map(|(s, a)| s.iter().filter(|j| !a.contains(j)).count()).collect();
    Ok(Evaluation { crps, rmse, tp, fp })
}

/// One method on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub replication: usize,
    pub failed: bool,
    pub error: Option<String>,
    pub crps: f64,
    pub rmse: Vec<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tp_per: Vec<usize>,
    pub fp_per: Vec<usize>,
    pub mstop: usize,
    /// Wall-clock seconds of fitting and refitting.
    pub elapsed: f64,
}

impl MetricsRow {
    fn failed(method: Method, replication: usize, k: usize, err: &Error) -> Self {
        Self {
            method,
            replication,
            failed: true,
            error: Some(err.to_string()),
            crps: f64::NAN,
            rmse: vec![f64::NAN; k],
            tp: 0,
            fp: 0,
            tp_per: vec![0; k],
            fp_per: vec![0; k],
            mstop: 0,
            elapsed: f64::NAN,
        }
    }
}

/// Means over the successful replications of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub reps: usize,
    pub failed: usize,
    pub tp: f64,
    pub fp: f64,
    pub tp_per: Vec<f64>,
    pub fp_per: Vec<f64>,
    pub crps: f64,
    pub rmse: Vec<f64>,
    pub elapsed: f64,
}

/// Per-replication rows (replication-major, methods in spec order) and
/// per-method means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub rows: Vec<MetricsRow>,
    pub summary: Vec<MethodSummary>,
}

/// Seed streams per replication: training draws, validation draws, the
/// covariate permutation, method seeds.
fn rep_rng(seed: u64, rep: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 * 4 + stream);
    rng
}

/// Training and validation draws for replication `rep`.
pub fn replicate_data(spec: &ScenarioSpec, rep: usize) -> Result<(Truth, SimData, SimData)> {
    let truth = Truth::standard(spec.family)?;
    let design = CovariateDesign::new(spec.ncols(), spec.rho_corr, &mut rep_rng(spec.seed, rep, 2))?;
    let mut rng = rep_rng(spec.seed, rep, 0);
    let train = SimData::generate(&truth, design.draw(spec.nobs, &mut rng), &mut rng)?;
    let mut rng = rep_rng(spec.seed, rep, 1);
    let valid = SimData::generate(&truth, design.draw(spec.n_valid, &mut rng), &mut rng)?;
    Ok((truth, train, valid))
}

fn run_replication(spec: &ScenarioSpec, rep: usize) -> Vec<MetricsRow> {
    let k = spec.family.n_params();
    let prepared = replicate_data(spec, rep).and_then(|(t, tr, va)| Ok((tr.dataset(spec.family)?, t, va)));
    let (ds, truth, valid) = match prepared {
        Ok(v) => v,
        Err(e) => return spec.methods.iter().map(|&m| MetricsRow::failed(m, rep, k, &e)).collect(),
    };
    let method_seed = rep_rng(spec.seed, rep, 3).next_u64();
    spec.methods
        .iter()
        .map(|&m| {
            let res = spec.fit_method(m, &ds, method_seed).and_then(|fit| {
                let ev = evaluate(&fit, &truth, &valid, spec.crps_draws, method_seed)?;
                Ok((fit, ev))
            });
            match res {
                Ok((fit, ev)) => MetricsRow {
                    method: m,
                    replication: rep,
                    failed: false,
                    error: None,
                    crps: ev.crps,
                    rmse: ev.rmse,
                    tp: ev.tp.iter().sum(),
                    fp: ev.fp.iter().sum(),
                    tp_per: ev.tp,
                    fp_per: ev.fp,
                    mstop: fit.mstop,
                    elapsed: fit.elapsed_fit + fit.elapsed_refit,
                },
                Err(e) => MetricsRow::failed(m, rep, k, &e),
            }
        })
        .collect()
}

/// Runs every method on every replication. Replications run in parallel;
/// results are ordered by replication and reproducible from `spec.seed`.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    let rows: Vec<MetricsRow> =
        (0..spec.reps).into_par_iter().map(|r| run_replication(spec, r)).collect::<Vec<_>>().concat();
    let summary = summarize(&spec.methods, spec.family.n_params(), &rows);
    Ok(ScenarioResult { spec: spec.clone(), rows, summary })
}

/// Per-method means over successful rows.
pub fn summarize(methods: &[Method], k: usize, rows: &[MetricsRow]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&m| {
            let all: Vec<&MetricsRow> = rows.iter().filter(|r| r.method == m).collect();
            let ok: Vec<&MetricsRow> = all.iter().copied().filter(|r| !r.failed).collect();
            let c = ok.len() as f64;
            let mean = |f: &dyn Fn(&MetricsRow) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / c
                }
            };
            MethodSummary {
                method: m,
                reps: all.len(),
                failed: all.len() - ok.len(),
                tp: mean(&|r| r.tp as f64),
                fp: mean(&|r| r.fp as f64),
                tp_per: (0..k).map(|i| mean(&|r| r.tp_per[i] as f64)).collect(),
                fp_per: (0..k).map(|i| mean(&|r| r.fp_per[i] as f64)).collect(),
                crps: mean(&|r| r.crps),
                rmse: (0..k).map(|i| mean(&|r| r.rmse[i])).collect(),
                elapsed: mean(&|r| r.elapsed),
            }
        })
        .collect()
}

/// Metrics table as CSV; per-parameter columns are suffixed with the
/// parameter name.
pub fn write_metrics_csv<W: Write>(family: Family, rows: &[MetricsRow], w: W) -> Result<()> {
    let names = family.param_names();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["method", "replication", "failed", "crps"].map(String::from).to_vec();
    header.extend(names.iter().map(|p| format!("rmse_{p}")));
    header.extend(["tp", "fp"].map(String::from));
    header.extend(names.iter().map(|p| format!("tp_{p}")));
    header.extend(names.iter().map(|p| format!("fp_{p}")));
    header.extend(["mstop", "elapsed", "error"].map(String::from));
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.method.to_string(), r.replication.to_string(), r.failed.to_string(), fmt_f64(r.crps)];
        rec.extend(r.rmse.iter().map(|v| fmt_f64(*v)));
        rec.extend([r.tp.to_string(), r.fp.to_string()]);
        rec.extend(r.tp_per.iter().map(usize::to_string));
        rec.extend(r.fp_per.iter().map(usize::to_string));
        rec.extend([r.mstop.to_string(), fmt_f64(r.elapsed), r.error.clone().unwrap_or_default()]);
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
