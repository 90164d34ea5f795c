//! Row-chunked evaluation of likelihoods, scores and column scans.
//!
//! Work is split into fixed-size chunks whose partial sums are combined in
//! order, so results do not depend on the number of threads.

use rayon::prelude::*;

use super::steps::Candidate;
use crate::error::{Error, Result};
use crate::families::Family;

pub(crate) const CHUNK: usize = 2048;

/// Rows taking part in a computation.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Rows<'a> {
    All(usize),
    Idx(&'a [usize]),
}

impl Rows<'_> {
    pub fn len(&self) -> usize {
        match self {
            Rows::All(n) => *n,
            Rows::Idx(r) => r.len(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        match self {
            Rows::All(_) => i,
            Rows::Idx(r) => r[i],
        }
    }
}

/// Per-parameter perturbation of the current predictors:
/// `η_k + add + step·x`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Shift<'a> {
    pub add: f64,
    pub col: Option<(&'a [f64], f64)>,
}

impl Shift<'_> {
    #[inline]
    fn apply(&self, eta: f64, r: usize) -> f64 {
        match self.col {
            Some((x, s)) => eta + self.add + s * x[r],
            None => eta + self.add,
        }
    }
}

fn chunk_ranges(m: usize) -> Vec<(usize, usize)> {
    (0..m.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(m))).collect()
}

/// Log-likelihood over `rows` at shifted predictors.
pub(crate) fn loglik(family: Family, y: &[f64], eta: &[Vec<f64>], rows: Rows<'_>, shift: &[Shift<'_>]) -> f64 {
    let k = eta.len();
    let part = |(a, b): (usize, usize)| {
        let mut e = [0.0; 4];
        let mut acc = 0.0;
        for i in a..b {
            let r = rows.get(i);
            for p in 0..k {
                e[p] = shift[p].apply(eta[p][r], r);
            }
            acc += family.log_density_eta(y[r], &e[..k]);
        }
        acc
    };
    let ranges = chunk_ranges(rows.len());
    if ranges.len() <= 1 {
        return ranges.into_iter().map(part).sum();
    }
    let parts: Vec<f64> = ranges.into_par_iter().map(part).collect();
    parts.iter().sum()
}

/// Scores at the current predictors, one vector per parameter, over `rows`.
pub(crate) fn scores(family: Family, y: &[f64], eta: &[Vec<f64>], rows: Rows<'_>) -> Result<Vec<Vec<f64>>> {
    let k = eta.len();
    let m = rows.len();
    let mut flat = vec![0.0; m * k];
    let fill = |(c, out): (usize, &mut [f64])| {
        let mut e = [0.0; 4];
        for (i, s) in out.chunks_mut(k).enumerate() {
            let r = rows.get(c * CHUNK + i);
            for p in 0..k {
                e[p] = eta[p][r];
            }
            family.score_eta(y[r], &e[..k], s);
        }
    };
    if m <= CHUNK {
        fill((0, &mut flat));
    } else {
        flat.par_chunks_mut(CHUNK * k).enumerate().for_each(fill);
    }
    let mut g = vec![Vec::with_capacity(m); k];
    for s in flat.chunks(k) {
        for p in 0..k {
            g[p].push(s[p]);
        }
    }
    for (p, gp) in g.iter().enumerate() {
        if let Some(i) = gp.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "score",
                location: format!("row {} (parameter {p})", rows.get(i)),
            });
        }
    }
    Ok(g)
}

/// Inner products of the listed columns with `g` and their correlations.
/// Returns the candidate with the largest `|c|`; the lowest position wins ties.
pub(crate) fn scan(cols: &[&[f64]], g: &[f64], rows: Rows<'_>) -> Option<Candidate> {
    if cols.is_empty() {
        return None;
    }
    let m = g.len();
    let mf = m as f64;
    let gbar = g.iter().sum::<f64>() / mf;
    let ss = g.iter().map(|v| (v - gbar) * (v - gbar)).sum::<f64>();
    let denom = if m > 1 { (mf - 1.0) * (ss / (mf - 1.0)).sqrt() } else { 0.0 };
    let one = |x: &&[f64]| -> (f64, f64) {
        let mut ip = 0.0;
        let mut sx = 0.0;
        match rows {
            Rows::All(_) => {
                for (xi, gi) in x.iter().zip(g) {
                    ip += xi * gi;
                    sx += xi;
                }
            }
            Rows::Idx(r) => {
                for (&ri, gi) in r.iter().zip(g) {
                    let xi = x[ri];
                    ip += xi * gi;
                    sx += xi;
                }
            }
        }
        (ip, sx)
    };
    let stats: Vec<(f64, f64)> = if cols.len() * m >= 1 << 16 {
        cols.par_iter().map(one).collect()
    } else {
        cols.iter().map(one).collect()
    };
    let mut best: Option<Candidate> = None;
    for (index, (ip, sx)) in stats.into_iter().enumerate() {
        let c = if denom > 0.0 { (ip - gbar * sx) / denom } else { 0.0 };
        if best.is_none_or(|b| c.abs() > b.c.abs()) {
            best = Some(Candidate { index, ip, c });
        }
    }
    best
}

/// Adds `add + step·x` to every entry of `eta`.
pub(crate) fn shift_all(eta: &mut [f64], add: f64, col: Option<(&[f64], f64)>) {
    match col {
        Some((x, s)) => eta.iter_mut().zip(x).for_each(|(e, xi)| *e = *e + add + s * xi),
        None => eta.iter_mut().for_each(|e| *e += add),
    }
}
