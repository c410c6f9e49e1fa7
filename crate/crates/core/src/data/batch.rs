use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::{DataError, Dataset};
use crate::rng::Rng;

/// Encoded minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub n_categorical: usize,
    pub n_numerical: usize,
    /// Row-major `[len × n_categorical]` vocabulary indices.
    pub categorical: Vec<usize>,
    /// Row-major `[len × n_numerical]` standardized values.
    pub numerical: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Vocabulary indices of categorical field `f` across the batch.
    pub fn categorical_column(&self, f: usize) -> Vec<usize> {
        (0..self.len())
            .map(|r| self.categorical[r * self.n_categorical + f])
            .collect()
    }

    pub fn select(&self, rows: &[usize]) -> Batch {
        let (c, m) = (self.n_categorical, self.n_numerical);
        let mut out = Batch {
            n_categorical: c,
            n_numerical: m,
            categorical: Vec::with_capacity(rows.len() * c),
            numerical: Vec::with_capacity(rows.len() * m),
            labels: Vec::with_capacity(rows.len()),
        };
        for &r in rows {
            out.categorical.extend_from_slice(&self.categorical[r * c..(r + 1) * c]);
            out.numerical.extend_from_slice(&self.numerical[r * m..(r + 1) * m]);
            out.labels.push(self.labels[r]);
        }
        out
    }
}

/// Splits one epoch of `ds` into batches of `batch_size`, the last one
/// possibly shorter. With a seed, row order is shuffled reproducibly.
pub fn iterate_batches(
    ds: &Dataset,
    batch_size: usize,
    shuffle_seed: Option<u64>,
) -> Result<Vec<Batch>, DataError> {
    if batch_size == 0 {
        return Err(DataError::InvalidBatchSize);
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut Rng::seed_from_u64(seed));
    }
    let full = ds.as_batch();
    Ok(order.chunks(batch_size).map(|rows| full.select(rows)).collect())
}
