use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use stagewise::data::{adjustment_shift, read_csv};
use stagewise::engine::{fmt_f64, FitResult, MethodConfig};
use stagewise::{Family, Link};

use crate::artifact::{csv_writer, read_json, Header};
use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// New data with the training covariate columns.
    pub data: PathBuf,
    /// Fitted model (`result.json` from `fit`).
    #[arg(long)]
    pub model: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Thresholds `c` for `P(Y ≥ c)` (count families).
    #[arg(long, value_delimiter = ',')]
    pub exceed: Vec<f64>,
    /// Population zero share; enables the subsampling intercept adjustment.
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Zero share of the training batches; taken from the stratified batch
    /// config when absent.
    #[arg(long, requires = "tau0")]
    pub t0: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PredictConfig<'a> {
    model: String,
    input: String,
    exceed: &'a [f64],
    tau0: Option<f64>,
    t0: Option<f64>,
    shift: Option<f64>,
}

/// Index of the logit-link parameter that receives the adjustment.
fn logit_param(family: Family) -> Option<usize> {
    family.links().iter().position(|l| *l == Link::Logit)
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult<()> {
    let (_, fit): (_, FitResult) = read_json(&args.model, "result")?;
    let family = fit.family;
    let table = read_csv(&args.data).context(args.data.display())?;
    let raw = table.select(&fit.stats.names).context(args.data.display())?;
    let x = fit.stats.transform(raw.view())?;
    let mut eta = fit.predict_eta(&x)?;
    if !args.exceed.is_empty() && !family.is_discrete() {
        return Err(CliError::input(format!("exceedance probabilities need a count family, model is {}", family.id())));
    }
    let (t0, shift) = match args.tau0 {
        None => (None, None),
        Some(tau0) => {
            let k = logit_param(family)
                .ok_or_else(|| CliError::input(format!("{} has no logit-link parameter to adjust", family.id())))?;
            let t0 = match args.t0 {
                Some(t) => t,
                None => match &fit.config {
                    MethodConfig::Stagewise(c) => c
                        .strata
                        .map(|s| s.zeros as f64 / (s.zeros + s.positives) as f64)
                        .ok_or_else(|| CliError::input("model has no stratified batches; pass --t0"))?,
                    MethodConfig::Boosting(_) => return Err(CliError::input("pass --t0 for a boosting model")),
                },
            };
            let s = adjustment_shift(tau0, t0)?;
            eta[k].iter_mut().for_each(|e| *e += s);
            (Some(t0), Some(s))
        }
    };
    let cfg = PredictConfig {
        model: args.model.display().to_string(),
        input: args.data.display().to_string(),
        exceed: &args.exceed,
        tau0: args.tau0,
        t0,
        shift,
    };
    let header = Header::new("predict", &cfg)?;
    let w: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(csv_writer(p, &header)?),
        None => {
            let mut w = create_stdout();
            writeln!(w, "# {}", serde_json::to_string(&header.0)?)?;
            w
        }
    };
    let mut out = csv::Writer::from_writer(w);
    let mut head: Vec<String> = vec!["row".into()];
    head.extend(family.param_names().iter().map(|s| s.to_string()));
    head.extend(args.exceed.iter().map(|c| format!("P(Y>={c})")));
    out.write_record(&head)?;
    let mut e = vec![0.0; eta.len()];
    for i in 0..x.nrows() {
        e.iter_mut().zip(&eta).for_each(|(v, col)| *v = col[i]);
        let theta = family.to_theta(&e);
        if theta.0.iter().any(|v| !v.is_finite()) {
            return Err(stagewise::Error::NonFinite { what: "predicted parameter", location: format!("row {}", i + 1) }.into());
        }
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(theta.0.iter().map(|v| fmt_f64(*v)));
        for &c in &args.exceed {
            rec.push(fmt_f64(family.exceedance(&theta, c)?));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn create_stdout() -> Box<dyn Write> {
    Box::new(std::io::BufWriter::new(std::io::stdout().lock()))
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjustment_targets_the_logit_parameter() {
        assert_eq!(logit_param(Family::ZaNegBin), Some(2));
        assert_eq!(logit_param(Family::Normal), None);
        assert_eq!(logit_param(Family::NegBin), None);
    }
}
