use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use stagewise::engine::{fmt_f64, FitResult};
use stagewise::simlab::{run_scenario, write_metrics_csv, Method, MethodSummary, ScenarioSpec};
use stagewise::Family;

use crate::artifact::{read_config, read_json, Header, OutDir};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// JSON scenario spec; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub nobs: Option<usize>,
    #[arg(long)]
    pub nnoise: Option<usize>,
    /// Correlation between neighbouring covariates.
    #[arg(long)]
    pub rho_corr: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated method names, e.g. `BS+CF,GB`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Validation rows per replication.
    #[arg(long)]
    pub n_valid: Option<usize>,
    #[arg(long, short = 'o', default_value = ".")]
    pub out_dir: PathBuf,
}

impl ScenarioArgs {
    fn apply(&self, spec: &mut ScenarioSpec) {
        if let Some(f) = self.family {
            spec.family = f;
        }
        if let Some(n) = self.nobs {
            spec.nobs = n;
        }
        if let Some(n) = self.nnoise {
            spec.nnoise = n;
        }
        if let Some(r) = self.rho_corr {
            spec.rho_corr = r;
        }
        if let Some(r) = self.reps {
            spec.reps = r;
        }
        if !self.methods.is_empty() {
            spec.methods = self.methods.clone();
        }
        if let Some(n) = self.n_valid {
            spec.n_valid = n;
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grid {
    /// The scenario given by the config and flags.
    Config,
    /// Scaled-down NO and ZANBI scenarios that run on a desktop.
    PaperDesk,
    /// Full factorial design: three families, six sample sizes, two noise
    /// levels, two correlations, 100 replications.
    Paper,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "config")]
    pub grid: Grid,
    /// Base seed; required so every benchmark is reproducible.
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Summary from `simulate` or `bench`.
    #[arg(long, required_unless_present = "fit", conflicts_with = "fit")]
    pub summary: Option<PathBuf>,
    /// Fit result from `fit`; emits its iteration trace.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long, short = 'o', default_value = ".")]
    pub out_dir: PathBuf,
}

/// Summary of one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub spec: ScenarioSpec,
    pub methods: Vec<MethodSummary>,
}

/// Scenarios of a grid, each seeded from `seed` and its position.
pub fn expand_grid(grid: Grid, base: &ScenarioSpec, seed: u64) -> Vec<ScenarioSpec> {
    let cell = |i: usize, family, nobs, nnoise, rho_corr, reps, methods: Vec<Method>| ScenarioSpec {
        family,
        nobs,
        nnoise,
        rho_corr,
        reps,
        methods,
        seed: seed.wrapping_add(i as u64),
        ..base.clone()
    };
    match grid {
        Grid::Config => vec![ScenarioSpec { seed, ..base.clone() }],
        Grid::PaperDesk => vec![
            cell(0, Family::Normal, 1000, 30, 0.7, 20, vec![Method::BsCf, Method::Gb]),
            cell(1, Family::ZaNegBin, 5000, 30, 0.7, 10, vec![Method::BsCf]),
        ],
        Grid::Paper => {
            let mut out = Vec::new();
            for family in [Family::Normal, Family::Gamma, Family::ZaNegBin] {
                for nobs in [500, 1000, 5000, 10_000, 100_000, 1_000_000] {
                    for nnoise in [30, 100] {
                        for rho in [0.0, 0.7] {
                            let methods = if nobs >= 100_000 {
                                vec![Method::Bw, Method::BwBs, Method::BwCf, Method::BwBsCf, Method::ThresDescBw]
                            } else {
                                Method::ALL.to_vec()
                            };
                            out.push(cell(out.len(), family, nobs, nnoise, rho, 100, methods));
                        }
                    }
                }
            }
            out
        }
    }
}

fn run_grid(command: &str, specs: Vec<ScenarioSpec>, grid: Option<Grid>, out_dir: &Path, quiet: bool) -> CliResult<()> {
    for s in &specs {
        s.validate()?;
    }
    let mut header = Header::new(command, &specs)?;
    if let Some(g) = grid {
        header = header.with("grid", g)?;
    }
    let out = OutDir::create(out_dir)?;
    let (_, mut w) = out.csv("metrics.csv", &header)?;
    let mut summaries = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        if !quiet {
            eprintln!(
                "[{}/{}] {} n={} nnoise={} rho={} reps={}",
                i + 1,
                specs.len(),
                spec.family.id(),
                spec.nobs,
                spec.nnoise,
                spec.rho_corr,
                spec.reps
            );
        }
        let res = run_scenario(spec)?;
        let mut buf = Vec::new();
        write_metrics_csv(spec.family, &res.rows, &mut buf)?;
        let text = String::from_utf8(buf).expect("csv output is utf-8");
        let mut lines = text.lines();
        let head = lines.next().unwrap_or_default();
        writeln!(w, "scenario,family,nobs,nnoise,rho_corr,{head}")?;
        for line in lines {
            writeln!(w, "{i},{},{},{},{},{line}", spec.family.id(), spec.nobs, spec.nnoise, fmt_f64(spec.rho_corr))?;
        }
        if !quiet {
            for m in &res.summary {
                eprintln!(
                    "  {:<14} TP {:.2} FP {:.2} CRPS {:.4} failed {}",
                    m.method.name(),
                    m.tp,
                    m.fp,
                    m.crps,
                    m.failed
                );
            }
        }
        summaries.push(ScenarioSummary { spec: spec.clone(), methods: res.summary });
    }
    w.flush()?;
    out.json("summary.json", &header, "scenarios", &summaries)?;
    write_plot_data(&out, &header, &summaries)?;
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs, quiet: bool) -> CliResult<()> {
    let mut spec: ScenarioSpec = read_config(args.scenario.config.as_deref())?;
    args.scenario.apply(&mut spec);
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    run_grid("simulate", vec![spec], None, &args.scenario.out_dir, quiet)
}

pub fn cmd_bench(args: &BenchArgs, quiet: bool) -> CliResult<()> {
    let mut base: ScenarioSpec = read_config(args.scenario.config.as_deref())?;
    args.scenario.apply(&mut base);
    let mut specs = expand_grid(args.grid, &base, args.seed);
    if args.grid != Grid::Config {
        // Explicit flags narrow the preset grid.
        for s in &mut specs {
            if let Some(r) = args.scenario.reps {
                s.reps = r;
            }
            if !args.scenario.methods.is_empty() {
                s.methods = args.scenario.methods.clone();
            }
        }
    }
    run_grid("bench", specs, Some(args.grid), &args.scenario.out_dir, quiet)
}

/// One CSV per metric with rows `family, nnoise, rho_corr, method, nobs, value`.
fn write_plot_data(out: &OutDir, header: &Header, scenarios: &[ScenarioSummary]) -> CliResult<()> {
    let mut metrics: Vec<String> = ["tp", "fp", "crps", "elapsed"].map(String::from).to_vec();
    for s in scenarios {
        for p in s.spec.family.param_names() {
            let m = format!("rmse_{p}");
            if !metrics.contains(&m) {
                metrics.push(m);
            }
        }
    }
    for metric in &metrics {
        let (_, w) = out.csv(&format!("plot_{metric}.csv"), header)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["family", "nnoise", "rho_corr", "method", "nobs", "value"])?;
        for s in scenarios {
            let names = s.spec.family.param_names();
            for m in &s.methods {
                let value = match metric.as_str() {
                    "tp" => m.tp,
                    "fp" => m.fp,
                    "crps" => m.crps,
                    "elapsed" => m.elapsed,
                    other => match names.iter().position(|p| format!("rmse_{p}") == other) {
                        Some(k) => m.rmse[k],
                        None => continue,
                    },
                };
                csv.write_record([
                    s.spec.family.id(),
                    &s.spec.nnoise.to_string(),
                    &fmt_f64(s.spec.rho_corr),
                    m.method.name(),
                    &s.spec.nobs.to_string(),
                    &fmt_f64(value),
                ])?;
            }
        }
        csv.flush()?;
    }
    Ok(())
}

pub fn cmd_plot(args: &PlotArgs) -> CliResult<()> {
    let out = OutDir::create(&args.out_dir)?;
    if let Some(path) = &args.summary {
        let (source, scenarios): (_, Vec<ScenarioSummary>) = read_json(path, "scenarios")?;
        let header = Header::new("plot-data", &source)?.with("input", path.display().to_string())?;
        return write_plot_data(&out, &header, &scenarios);
    }
    let path = args.fit.as_ref().ok_or_else(|| CliError::input("need --summary or --fit"))?;
    let (source, fit): (_, FitResult) = read_json(path, "result")?;
    let header = Header::new("plot-data", &source)?.with("input", path.display().to_string())?;
    let (_, w) = out.csv("trace.csv", &header)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["iteration", "loglik", "df", "bic", "bic_criterion", "mstop"])?;
    for (r, crit) in fit.trace.iter().zip(&fit.bic_criterion) {
        csv.write_record([
            r.t.to_string(),
            fmt_f64(r.loglik),
            r.df.to_string(),
            fmt_f64(r.bic),
            fmt_f64(*crit),
            (r.t == fit.mstop).to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
