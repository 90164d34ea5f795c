use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling strata for batch construction: each batch takes exactly
/// `sizes[s]` rows from `groups[s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub groups: Vec<Vec<usize>>,
    pub sizes: Vec<usize>,
    /// Sample with replacement when a stratum is smaller than its size.
    #[serde(default)]
    pub replace: bool,
}

impl Strata {
    /// Zero/positive split of a count response with a fixed count from each.
    pub fn zero_positive(y: &[f64], zeros: usize, positives: usize, replace: bool) -> Self {
        let (z, p): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| y[i] == 0.0);
        Self { groups: vec![z, p], sizes: vec![zeros, positives], replace }
    }

    pub fn batch_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Share of rows in a batch drawn from the first stratum.
    pub fn first_share(&self) -> f64 {
        self.sizes[0] as f64 / self.batch_size() as f64
    }
}

/// Ordered batch indices `i_1, …, i_T`.
///
/// Random schedules are generated on demand from the seed and the iteration
/// index, so long runs do not hold every batch in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BatchSchedule {
    /// Every batch is `0..n`.
    Full { n: usize, t_max: usize },
    /// Explicit batches, cycled if shorter than the run.
    Fixed(Vec<Vec<usize>>),
    Random {
        n: usize,
        bs: usize,
        t_max: usize,
        seed: u64,
        strata: Option<Strata>,
    },
}

impl BatchSchedule {
    /// Number of batches `T`.
    pub fn len(&self) -> usize {
        match self {
            BatchSchedule::Full { t_max, .. } | BatchSchedule::Random { t_max, .. } => *t_max,
            BatchSchedule::Fixed(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Batch size `bs`.
    pub fn batch_size(&self) -> usize {
        match self {
            BatchSchedule::Full { n, .. } => *n,
            BatchSchedule::Fixed(b) => b.first().map_or(0, Vec::len),
            BatchSchedule::Random { bs, .. } => *bs,
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, BatchSchedule::Full { .. })
    }

    /// Indices of batch `t` (zero-based). Sorted ascending.
    pub fn batch(&self, t: usize) -> Vec<usize> {
        match self {
            BatchSchedule::Full { n, .. } => (0..*n).collect(),
            BatchSchedule::Fixed(b) => b[t % b.len()].clone(),
            BatchSchedule::Random { n, bs, seed, strata, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(t as u64);
                let mut idx = match strata {
                    None => sample(&mut rng, *n, *bs).into_vec(),
                    Some(s) => draw_strata(s, &mut rng),
                };
                idx.sort_unstable();
                idx
            }
        }
    }

    /// Materialises all batches.
    pub fn to_vec(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|t| self.batch(t)).collect()
    }
}

fn draw_strata<R: Rng>(s: &Strata, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(s.batch_size());
    for (group, &size) in s.groups.iter().zip(&s.sizes) {
        if size <= group.len() {
            out.extend(sample(rng, group.len(), size).into_iter().map(|i| group[i]));
        } else {
            out.extend((0..size).map(|_| group[rng.random_range(0..group.len())]));
        }
    }
    out
}

/// Builds a seeded schedule of `t_max` batches of size `bs` from `0..n`.
///
/// Batches are drawn without replacement within a batch and independently
/// across batches. With `bs == n` and no strata every batch is `0..n`.
pub fn make_batches(n: usize, bs: usize, t_max: usize, seed: u64, strata: Option<Strata>) -> Result<BatchSchedule> {
    if n == 0 {
        return Err(Error::InvalidInput("cannot batch an empty dataset".into()));
    }
    if let Some(s) = &strata {
        if s.groups.len() != s.sizes.len() || s.groups.is_empty() {
            return Err(Error::InvalidInput("strata need one size per group".into()));
        }
        if s.batch_size() != bs {
            return Err(Error::InvalidInput(format!(
                "strata sizes sum to {} but bs = {bs}",
                s.batch_size()
            )));
        }
        for (k, (g, &size)) in s.groups.iter().zip(&s.sizes).enumerate() {
            if g.iter().any(|&i| i >= n) {
                return Err(Error::InvalidInput(format!("stratum {k} has an index out of range")));
            }
            if size > 0 && g.is_empty() {
                return Err(Error::InvalidInput(format!("stratum {k} is empty")));
            }
            if size > g.len() && !s.replace {
                return Err(Error::InvalidInput(format!(
                    "stratum {k} holds {} rows but {size} were requested without replacement",
                    g.len()
                )));
            }
        }
    } else if bs == 0 || bs > n {
        return Err(Error::InvalidInput(format!("batch size {bs} outside 1..={n}")));
    }
    if bs == 0 {
        return Err(Error::InvalidInput("batch size must be positive".into()));
    }
    if bs == n && strata.is_none() {
        return Ok(BatchSchedule::Full { n, t_max });
    }
    Ok(BatchSchedule::Random { n, bs, t_max, seed, strata })
}
