use ndarray::{Array2, ArrayView2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column means and standard deviations (divisor `n − 1`) of a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Learns column statistics. Fails on fewer than two rows or a constant column.
    pub fn fit(raw: ArrayView2<'_, f64>, names: &[String]) -> Result<Self> {
        let (n, p) = raw.dim();
        if names.len() != p {
            return Err(Error::InvalidInput(format!("{} column names for {p} columns", names.len())));
        }
        if n < 2 {
            return Err(Error::InvalidInput("standardisation needs at least two rows".into()));
        }
        let mut mean = Vec::with_capacity(p);
        let mut sd = Vec::with_capacity(p);
        for (j, col) in raw.columns().into_iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value in column `{}` at row {i}",
                    names[j]
                )));
            }
            let m = col.sum() / n as f64;
            let ss = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            let s = (ss / (n - 1) as f64).sqrt();
            if !(s > 1e-12 * m.abs().max(1.0)) {
                return Err(Error::InvalidInput(format!("column `{}` is constant", names[j])));
            }
            mean.push(m);
            sd.push(s);
        }
        Ok(Self { names: names.to_vec(), mean, sd })
    }

    /// Applies the stored statistics. The result is column-major.
    pub fn transform(&self, raw: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (n, p) = raw.dim();
        if p != self.mean.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} columns, got {p}",
                self.mean.len()
            )));
        }
        let mut out = Array2::zeros((n, p).f());
        for j in 0..p {
            let (m, s) = (self.mean[j], self.sd[j]);
            out.column_mut(j).zip_mut_with(&raw.column(j), |o, &v| *o = (v - m) / s);
        }
        Ok(out)
    }

    /// Maps a slope on the standardised scale back to the raw scale.
    pub fn raw_slope(&self, j: usize, beta: f64) -> f64 {
        beta / self.sd[j]
    }
}

/// Fits a [`Standardizer`] and returns the transformed matrix alongside it.
pub fn standardize(raw: ArrayView2<'_, f64>, names: &[String]) -> Result<(Array2<f64>, Standardizer)> {
    let st = Standardizer::fit(raw, names)?;
    let x = st.transform(raw)?;
    Ok((x, st))
}
