use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{DataError, Dataset};
use crate::math;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Classes with fewer than two samples; their samples all went to train.
    pub undersized_classes: Vec<usize>,
}

/// Stratified train/test index split.
///
/// Each class with `n >= 2` samples contributes `round(n · fraction)` rows
/// to train, clamped to `[1, n - 1]` so both sides see the class. Classes
/// with a single sample go to train and are reported.
pub fn stratified_indices(
    labels: &[usize],
    n_classes: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    let mut by_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = stream(seed, Stream::Split);
    let mut out = SplitIndices {
        train: Vec::new(),
        test: Vec::new(),
        undersized_classes: Vec::new(),
    };
    for (class, rows) in by_class.iter_mut().enumerate() {
        let n = rows.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            log::warn!("class {class} has {n} sample(s); assigning to train only");
            out.undersized_classes.push(class);
            out.train.extend_from_slice(rows);
            continue;
        }
        rows.shuffle(&mut rng);
        let k = (math::round(n as f64 * train_fraction) as usize).clamp(1, n - 1);
        out.train.extend_from_slice(&rows[..k]);
        out.test.extend_from_slice(&rows[k..]);
    }
    out.train.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    let idx = stratified_indices(&ds.labels, ds.n_classes, train_fraction, seed)?;
    Ok((ds.select(&idx.train), ds.select(&idx.test)))
}
