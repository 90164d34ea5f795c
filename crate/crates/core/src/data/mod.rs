//! Datasets, standardisation, batching and subsample corrections.

mod batch;
mod standardize;

use std::path::Path;

use ndarray::{Array2, ArrayView1, ShapeBuilder};

use crate::error::{Error, Result};
use crate::families::Family;

pub use batch::{make_batches, BatchSchedule, Strata};
pub use standardize::{standardize, Standardizer};

/// Response plus a shared standardised covariate matrix.
///
/// Each distribution parameter `k` uses the covariate columns listed in
/// `columns[k]`; its design matrix is those columns plus an implicit
/// intercept, so coefficient vectors read `[β₀, β₁, …, β_{J_k}]`.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    x: Array2<f64>,
    columns: Vec<Vec<usize>>,
    stats: Standardizer,
}

impl Dataset {
    /// Standardises `raw` and gives every parameter every column.
    pub fn new(family: Family, y: Vec<f64>, raw: Array2<f64>, names: &[String]) -> Result<Self> {
        let p = raw.ncols();
        Self::with_columns(family, y, raw, names, vec![(0..p).collect(); family.n_params()])
    }

    /// Standardises `raw` with explicit per-parameter column lists.
    pub fn with_columns(
        family: Family,
        y: Vec<f64>,
        raw: Array2<f64>,
        names: &[String],
        columns: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let (x, stats) = standardize(raw.view(), names)?;
        Self::from_standardized(family, y, x, stats, columns)
    }

    /// Wraps a matrix that is already on the scale described by `stats`.
    pub fn from_standardized(
        family: Family,
        y: Vec<f64>,
        x: Array2<f64>,
        stats: Standardizer,
        columns: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidInput(format!(
                "response has {} rows, covariates {}",
                y.len(),
                x.nrows()
            )));
        }
        if columns.len() != family.n_params() {
            return Err(Error::InvalidInput(format!(
                "{} column lists for {} parameters",
                columns.len(),
                family.n_params()
            )));
        }
        if let Some(&j) = columns.iter().flatten().find(|&&j| j >= x.ncols()) {
            return Err(Error::InvalidInput(format!("column index {j} out of range")));
        }
        for &v in &y {
            family.check_observation(v)?;
        }
        let x = if x.is_standard_layout() && x.ncols() > 1 {
            let mut f = Array2::zeros(x.raw_dim().f());
            f.assign(&x);
            f
        } else {
            x
        };
        Ok(Self { y, x, columns, stats })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// The standardised covariate matrix (column-major).
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Column `j` of the shared matrix as a contiguous slice.
    pub fn col(&self, j: usize) -> &[f64] {
        self.x.column(j).to_slice().expect("column-major storage")
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.x.column(j)
    }

    /// Covariate indices used by parameter `k`.
    pub fn columns(&self, k: usize) -> &[usize] {
        &self.columns[k]
    }

    pub fn all_columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    /// `J_k`.
    pub fn n_cols(&self, k: usize) -> usize {
        self.columns[k].len()
    }

    pub fn names(&self) -> &[String] {
        &self.stats.names
    }

    pub fn stats(&self) -> &Standardizer {
        &self.stats
    }

    /// Rows `rows`, keeping the training standardisation.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        let p = self.x.ncols();
        let mut x = Array2::zeros((rows.len(), p).f());
        for j in 0..p {
            let src = self.col(j);
            for (dst, &i) in x.column_mut(j).iter_mut().zip(rows) {
                *dst = src[i];
            }
        }
        Dataset {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            x,
            columns: self.columns.clone(),
            stats: self.stats.clone(),
        }
    }

    /// Same rows with parameter `k` restricted to `keep[k]` (indices into the
    /// shared matrix).
    pub fn restrict_columns(&self, keep: Vec<Vec<usize>>) -> Dataset {
        Dataset { y: self.y.clone(), x: self.x.clone(), columns: keep, stats: self.stats.clone() }
    }
}

/// Raw table read from CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub names: Vec<String>,
    pub rows: Array2<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidInput(format!("missing column `{name}`")))
    }

    /// Splits off the response column; the remaining columns are covariates.
    pub fn split_response(&self, response: &str) -> Result<(Vec<f64>, Array2<f64>, Vec<String>)> {
        let r = self.column_index(response)?;
        let y = self.rows.column(r).to_vec();
        let keep: Vec<usize> = (0..self.names.len()).filter(|&j| j != r).collect();
        let x = self.rows.select(ndarray::Axis(1), &keep);
        let names = keep.iter().map(|&j| self.names[j].clone()).collect();
        Ok((y, x, names))
    }

    /// Columns `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<Array2<f64>> {
        let idx = names.iter().map(|n| self.column_index(n)).collect::<Result<Vec<_>>>()?;
        Ok(self.rows.select(ndarray::Axis(1), &idx))
    }
}

/// Reads a headed numeric CSV. Lines starting with `#` are skipped.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if names.is_empty() {
        return Err(Error::InvalidInput("CSV has no header".into()));
    }
    let mut values = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidInput(format!("row {}, column `{}`: `{field}` is not a number", i + 1, names[j]))
            })?;
            values.push(v);
        }
        n += 1;
    }
    let rows = Array2::from_shape_vec((n, names.len()), values)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(Table { names, rows })
}

/// Builds a dataset from a CSV table. `param_columns`, if given, lists the
/// covariate names each parameter may use; otherwise all of them.
pub fn dataset_from_table(
    family: Family,
    table: &Table,
    response: &str,
    param_columns: Option<&[Vec<String>]>,
) -> Result<Dataset> {
    let (y, x, names) = table.split_response(response)?;
    let columns = match param_columns {
        None => vec![(0..names.len()).collect(); family.n_params()],
        Some(lists) => {
            if lists.len() != family.n_params() {
                return Err(Error::InvalidInput(format!(
                    "{} column lists for {} parameters",
                    lists.len(),
                    family.n_params()
                )));
            }
            lists
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|c| {
                            names
                                .iter()
                                .position(|n| n == c)
                                .ok_or_else(|| Error::InvalidInput(format!("missing column `{c}`")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Dataset::with_columns(family, y, x, &names, columns)
}

/// Corrects a logit-link intercept fitted on data where the zero class was
/// subsampled to share `t0`, given the population zero share `tau0`.
pub fn intercept_adjustment(beta0_sub: f64, tau0: f64, t0: f64) -> Result<f64> {
    Ok(beta0_sub + adjustment_shift(tau0, t0)?)
}

/// The additive shift `−log((1−τ₀)/τ₀ · t₀/(1−t₀))`.
pub fn adjustment_shift(tau0: f64, t0: f64) -> Result<f64> {
    for (name, v) in [("tau0", tau0), ("t0", t0)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidInput(format!("{name} = {v} must lie strictly inside (0, 1)")));
        }
    }
    let odds_pop = (-tau0).ln_1p() - tau0.ln();
    let odds_sub = t0.ln() - (-t0).ln_1p();
    Ok(-(odds_pop + odds_sub))
}

/// Zero share of a response.
pub fn zero_fraction(y: &[f64]) -> f64 {
    y.iter().filter(|&&v| v == 0.0).count() as f64 / y.len() as f64
}
