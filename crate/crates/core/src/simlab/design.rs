//! Synthetic covariates and responses for the simulation study.

use nalgebra::DMatrix;
use ndarray::{Array2, ShapeBuilder};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::{Family, ParamVector};

/// AR(1)-correlated uniform covariates: rows of iid `U(-1, 1)` draws
/// multiplied by `Lᵀ` where `LLᵀ = Σ`, `Σ_ij = ρ^|i-j|`, followed by a
/// column permutation.
#[derive(Debug, Clone)]
pub struct CovariateDesign {
    ncols: usize,
    chol: Option<DMatrix<f64>>,
    perm: Vec<usize>,
}

impl CovariateDesign {
    /// Design with a permutation drawn from `rng` (identity when `rho == 0`).
    pub fn new<R: Rng + ?Sized>(ncols: usize, rho: f64, rng: &mut R) -> Result<Self> {
        if ncols == 0 {
            return Err(Error::InvalidInput("need at least one covariate".into()));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidInput(format!("correlation must lie in [0, 1), got {rho}")));
        }
        let mut perm: Vec<usize> = (0..ncols).collect();
        if rho == 0.0 {
            return Ok(Self { ncols, chol: None, perm });
        }
        let sigma = ar1(ncols, rho);
        let chol = sigma
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("correlation matrix is not positive definite".into()))?
            .l();
        perm.shuffle(rng);
        Ok(Self { ncols, chol: Some(chol), perm })
    }

    /// Output column `j` holds pre-permutation column `perm()[j]`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// `nobs` rows, column-major.
    pub fn draw<R: Rng + ?Sized>(&self, nobs: usize, rng: &mut R) -> Array2<f64> {
        let p = self.ncols;
        let mut out = Array2::zeros((nobs, p).f());
        let mut u = vec![0.0; p];
        let mut z = vec![0.0; p];
        for i in 0..nobs {
            u.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            match &self.chol {
                None => z.copy_from_slice(&u),
                Some(l) => {
                    for (j, zj) in z.iter_mut().enumerate() {
                        *zj = (0..=j).map(|m| l[(j, m)] * u[m]).sum();
                    }
                }
            }
            for (j, &src) in self.perm.iter().enumerate() {
                out[(i, j)] = z[src];
            }
        }
        out
    }
}

/// `Σ_ij = ρ^|i-j|`.
pub fn ar1(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// One-shot covariate matrix with a design and draws seeded from `seed`.
pub fn gen_covariates(nobs: usize, ncols: usize, rho: f64, seed: u64) -> Result<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = CovariateDesign::new(ncols, rho, &mut rng)?;
    Ok(design.draw(nobs, &mut rng))
}

/// True linear predictors: intercept plus sparse slopes on raw covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub family: Family,
    pub intercepts: Vec<f64>,
    /// `(column, coefficient)` per parameter.
    pub effects: Vec<Vec<(usize, f64)>>,
}

impl Truth {
    /// The simulation specification for `NO`, `GA` and `ZANBI`. Columns are
    /// zero-based, so `x₁` is column 0.
    pub fn standard(family: Family) -> Result<Self> {
        let (intercepts, effects) = match family {
            Family::Normal => (
                vec![0.0, 0.0],
                vec![
                    vec![(0, 1.0), (1, 2.0), (2, 0.5), (3, -1.0)],
                    vec![(2, 0.5), (3, 0.25), (4, -0.25), (5, -0.5)],
                ],
            ),
            Family::Gamma => (
                vec![0.0, 0.0],
                vec![
                    vec![(0, 1.0), (2, 2.0), (4, 0.5), (5, -1.0)],
                    vec![(2, 0.5), (3, 0.75), (4, -0.3), (5, -0.5)],
                ],
            ),
            Family::ZaNegBin => (
                vec![0.5, -1.0, -0.5],
                vec![
                    vec![(0, 0.5), (2, -1.0), (4, 0.75), (5, 0.75)],
                    vec![(1, 1.0), (3, -1.25), (4, 1.0)],
                    vec![(2, 1.0), (3, -1.0), (4, -1.0)],
                ],
            ),
            Family::NegBin => {
                return Err(Error::InvalidInput("no simulation truth defined for NBI".into()));
            }
        };
        Ok(Self { family, intercepts, effects })
    }

    /// Number of covariates the truth touches.
    pub fn min_cols(&self) -> usize {
        self.effects.iter().flatten().map(|&(j, _)| j + 1).max().unwrap_or(0)
    }

    /// Sorted true columns per parameter.
    pub fn active(&self) -> Vec<Vec<usize>> {
        self.effects
            .iter()
            .map(|e| {
                let mut v: Vec<usize> = e.iter().map(|&(j, _)| j).collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    pub fn n_effects(&self) -> usize {
        self.effects.iter().map(Vec::len).sum()
    }

    /// Predictors on raw covariates, one vector per parameter.
    pub fn eta(&self, raw: &Array2<f64>) -> Vec<Vec<f64>> {
        self.intercepts
            .iter()
            .zip(&self.effects)
            .map(|(&b0, eff)| {
                (0..raw.nrows())
                    .map(|i| b0 + eff.iter().map(|&(j, b)| b * raw[(i, j)]).sum::<f64>())
                    .collect()
            })
            .collect()
    }
}

/// Covariates, true predictors and response for one draw.
#[derive(Debug, Clone)]
pub struct SimData {
    pub raw: Array2<f64>,
    pub eta: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub names: Vec<String>,
}

impl SimData {
    /// Samples a response for `raw` under `truth`.
    pub fn generate<R: Rng + ?Sized>(truth: &Truth, raw: Array2<f64>, rng: &mut R) -> Result<Self> {
        if raw.ncols() < truth.min_cols() {
            return Err(Error::InvalidInput(format!(
                "truth needs {} covariates, got {}",
                truth.min_cols(),
                raw.ncols()
            )));
        }
        let eta = truth.eta(&raw);
        let mut e = vec![0.0; eta.len()];
        let y = (0..raw.nrows())
            .map(|i| {
                e.iter_mut().zip(&eta).for_each(|(v, col)| *v = col[i]);
                truth.family.sample(&truth.family.to_theta(&e), rng)
            })
            .collect::<Result<Vec<f64>>>()?;
        let names = (1..=raw.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self { raw, eta, y, names })
    }

    /// Standardised dataset with every covariate offered to every parameter.
    pub fn dataset(&self, family: Family) -> Result<Dataset> {
        Dataset::new(family, self.y.clone(), self.raw.clone(), &self.names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Parameters at row `i`.
    pub fn theta(&self, family: Family, i: usize) -> ParamVector {
        let e: Vec<f64> = self.eta.iter().map(|c| c[i]).collect();
        family.to_theta(&e)
    }
}

/// Response under the standard truth for `family`, seeded from `seed`.
pub fn gen_response(family: Family, raw: &Array2<f64>, seed: u64) -> Result<Dataset> {
    let truth = Truth::standard(family)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SimData::generate(&truth, raw.clone(), &mut rng)?.dataset(family)
}
