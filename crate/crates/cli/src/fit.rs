use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use stagewise::baseline::{gb_fit, gb_fit_cv, var_deselect, GbConfig, GbMode};
use stagewise::data::{dataset_from_table, read_csv};
use stagewise::engine::{fmt_f64, sbdr_fit, threshold_descent, FitConfig, FitResult, Kappa, StrataConfig, UpdateMode};
use stagewise::simlab::ThresDescConfig;
use stagewise::Family;

use crate::artifact::{read_config, Header, OutDir};
use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Stagewise boosting with BIC stopping and refit.
    #[default]
    Stagewise,
    /// Stagewise boosting over a descending threshold grid.
    Thresdesc,
    /// Component-wise gradient boosting.
    Gb,
    /// Gradient boosting followed by variable deselection.
    Vardes,
}

/// Contents of a fit config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    pub family: Option<Family>,
    pub method: FitMethod,
    pub response: String,
    /// Covariate names per parameter; all covariates when absent.
    pub columns: Option<Vec<Vec<String>>>,
    pub stagewise: FitConfig,
    pub thresdesc: ThresDescConfig,
    pub gb: GbConfig,
    /// Choose the gradient-boosting stopping iteration by cross-validation.
    pub cv: bool,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            family: None,
            method: FitMethod::Stagewise,
            response: "y".into(),
            columns: None,
            stagewise: FitConfig::default(),
            thresdesc: ThresDescConfig::default(),
            gb: GbConfig::default(),
            cv: true,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training data (CSV with header).
    pub data: PathBuf,
    /// Distribution family: NO, GA, NBI or ZANBI.
    #[arg(long)]
    pub family: Option<Family>,
    /// JSON config; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<FitMethod>,
    /// Response column name.
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, short = 'o', default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Step length (stagewise) or step factor (gradient boosting).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of iterations.
    #[arg(long = "iterations", short = 'T')]
    pub t_max: Option<usize>,
    /// Correlation threshold: a number or `auto`.
    #[arg(long)]
    pub kappa: Option<String>,
    /// Batch size for batchwise updating.
    #[arg(long)]
    pub bs: Option<usize>,
    /// Stratified batches: zeros per batch (needs --strata-positives).
    #[arg(long, requires = "strata_positives")]
    pub strata_zeros: Option<usize>,
    #[arg(long, requires = "strata_zeros")]
    pub strata_positives: Option<usize>,
    #[arg(long, value_parser = parse_update_mode)]
    pub update_mode: Option<UpdateMode>,
    /// Disable correlation filtering.
    #[arg(long)]
    pub no_cf: bool,
    /// Skip the refit of the selected variables.
    #[arg(long)]
    pub no_refit: bool,
    /// Cyclical instead of non-cyclical gradient boosting.
    #[arg(long)]
    pub cyclical: bool,
}

fn parse_update_mode(s: &str) -> Result<UpdateMode, String> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "noncyclical" | "non_cyclical" => Ok(UpdateMode::Noncyclical),
        "best_subset" | "bestsubset" => Ok(UpdateMode::BestSubset),
        _ => Err(format!("unknown update mode `{s}` (noncyclical, best_subset)")),
    }
}

pub fn parse_kappa(s: &str) -> CliResult<Kappa> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Kappa::Auto);
    }
    s.parse::<f64>().map(Kappa::Fixed).map_err(|_| CliError::input(format!("kappa must be a number or `auto`, got `{s}`")))
}

/// Config file merged with flag overrides.
pub fn resolve(args: &FitArgs) -> CliResult<FitSpec> {
    let mut spec: FitSpec = read_config(args.config.as_deref())?;
    if let Some(f) = args.family {
        spec.family = Some(f);
    }
    if let Some(m) = args.method {
        spec.method = m;
    }
    if let Some(r) = &args.response {
        spec.response = r.clone();
    }
    let gb_like = matches!(spec.method, FitMethod::Gb | FitMethod::Vardes);
    if let Some(s) = args.seed {
        spec.stagewise.seed = s;
        spec.gb.seed = s;
    }
    if let Some(e) = args.eps {
        if gb_like {
            spec.gb.eps = e;
        } else {
            spec.stagewise.eps = e;
        }
    }
    if let Some(t) = args.t_max {
        if gb_like {
            spec.gb.t_max = t;
        } else {
            spec.stagewise.t_max = t;
        }
    }
    if let Some(k) = &args.kappa {
        spec.stagewise.kappa = parse_kappa(k)?;
    }
    if let Some(bs) = args.bs {
        spec.stagewise.bs = Some(bs);
    }
    if let (Some(zeros), Some(positives)) = (args.strata_zeros, args.strata_positives) {
        spec.stagewise.strata = Some(StrataConfig { zeros, positives, replace: false });
    }
    if let Some(m) = args.update_mode {
        spec.stagewise.update_mode = m;
    }
    if args.no_cf {
        spec.stagewise.cf_enabled = false;
    }
    if args.no_refit {
        spec.stagewise.refit = false;
    }
    if args.cyclical {
        spec.gb.mode = GbMode::Cyclical;
    }
    if spec.family.is_none() {
        return Err(CliError::input("no family given (use --family or `family` in the config)"));
    }
    Ok(spec)
}

pub fn run_spec(spec: &FitSpec, data: &Path) -> CliResult<FitResult> {
    let family = spec.family.expect("resolved family");
    let table = read_csv(data).context(data.display())?;
    let ds = dataset_from_table(family, &table, &spec.response, spec.columns.as_deref()).context(data.display())?;
    let fit = match spec.method {
        FitMethod::Stagewise => sbdr_fit(family, &ds, &spec.stagewise)?,
        FitMethod::Thresdesc => {
            let td = &spec.thresdesc;
            threshold_descent(family, &ds, &spec.stagewise, td.kappa_start, td.kappa_step, td.iters_per_level)?
        }
        FitMethod::Gb if spec.cv => gb_fit_cv(family, &ds, &spec.gb)?.0,
        FitMethod::Gb => gb_fit(family, &ds, &spec.gb)?,
        FitMethod::Vardes => {
            let base = if spec.cv { gb_fit_cv(family, &ds, &spec.gb)?.0 } else { gb_fit(family, &ds, &spec.gb)? };
            var_deselect(family, &ds, &base, spec.gb.threshold)?.fit
        }
    };
    Ok(fit)
}

pub fn cmd_fit(args: &FitArgs, quiet: bool) -> CliResult<()> {
    let spec = resolve(args)?;
    let fit = run_spec(&spec, &args.data)?;
    let header = Header::new("fit", &spec)?.with("input", args.data.display().to_string())?;
    let out = OutDir::create(&args.out_dir)?;
    let result = out.json("result.json", &header, "result", &fit)?;
    let (path, w) = out.csv("path.csv", &header)?;
    fit.write_path_csv(w)?;
    let (sel, w) = out.csv("selected.csv", &header)?;
    write_selected(&fit, w)?;
    if !quiet {
        eprintln!("{}: mstop {} of {}", fit.method, fit.mstop, fit.trace.len() - 1);
        for (k, names) in fit.selected_names.iter().enumerate() {
            eprintln!("  {}: {}", fit.family.param_names()[k], if names.is_empty() { "-".into() } else { names.join(", ") });
        }
        eprintln!("wrote {}, {}, {}", result.display(), path.display(), sel.display());
    }
    Ok(())
}

/// Nonzero final slopes on the standardised and on the raw covariate scale.
fn write_selected<W: Write>(fit: &FitResult, w: W) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["parameter", "column", "coefficient", "raw_coefficient"])?;
    let state = fit.final_state();
    for (k, beta) in state.beta.iter().enumerate() {
        for (m, &b) in beta.iter().enumerate().skip(1) {
            if b != 0.0 {
                let j = fit.column_index[k][m - 1];
                out.write_record([
                    fit.family.param_names()[k],
                    &fit.stats.names[j],
                    &fmt_f64(b),
                    &fmt_f64(fit.stats.raw_slope(j, b)),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
