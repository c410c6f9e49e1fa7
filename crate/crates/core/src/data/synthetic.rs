use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, FeatureSchema, RawTable};
use crate::math;
use crate::rng::{stream, Rng, Stream};

/// Parameters of the synthetic class-imbalanced generator.
///
/// Class `c` draws numericals from `N(separation · u_c, I)` with `u_c` a
/// random unit direction, and each categorical field from a mixture that
/// puts weight `separation / (1 + separation)` on a class-specific favourite
/// value and the rest uniformly over the vocabulary. A separation of zero
/// makes every class identically distributed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub samples_per_class: Vec<usize>,
    pub n_categorical: usize,
    pub vocab_size: usize,
    pub n_numerical: usize,
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 5,
            samples_per_class: vec![1000, 1000, 1000, 1000, 20],
            n_categorical: 4,
            vocab_size: 8,
            n_numerical: 4,
            class_separation: 2.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_classes == 0 {
            return Err(DataError::InvalidSpec("n_classes must be positive"));
        }
        if self.samples_per_class.len() != self.n_classes {
            return Err(DataError::InvalidSpec("samples_per_class needs one entry per class"));
        }
        if self.samples_per_class.iter().any(|&n| n == 0) {
            return Err(DataError::InvalidSpec("every class needs at least one sample"));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(DataError::InvalidSpec("class_separation must be finite and nonnegative"));
        }
        if self.n_categorical + self.n_numerical == 0 {
            return Err(DataError::InvalidSpec("at least one feature field is required"));
        }
        if self.n_categorical > 0 && self.vocab_size == 0 {
            return Err(DataError::InvalidSpec("vocab_size must be positive"));
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.samples_per_class.iter().sum()
    }

    pub fn categorical_name(f: usize) -> String {
        format!("cat_{f}")
    }

    pub fn numerical_name(j: usize) -> String {
        format!("num_{j}")
    }

    pub fn class_name(c: usize) -> String {
        format!("class_{c}")
    }
}

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws the raw (unstandardized) table described by `spec`, rows shuffled.
pub fn generate_synthetic_raw(spec: &SyntheticSpec) -> Result<RawTable, DataError> {
    spec.validate()?;
    let mut rng = stream(spec.seed, Stream::Synthetic);
    let (c, m, v) = (spec.n_categorical, spec.n_numerical, spec.vocab_size);

    let mut means = Vec::with_capacity(spec.n_classes);
    let mut favourites = Vec::with_capacity(spec.n_classes);
    for _ in 0..spec.n_classes {
        let mut dir: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
        let norm = math::sqrt(dir.iter().map(|x| x * x).sum());
        if norm > 0.0 {
            dir.iter_mut().for_each(|x| *x *= spec.class_separation / norm);
        }
        means.push(dir);
        favourites.push((0..c).map(|_| rng.random_range(0..v)).collect::<Vec<_>>());
    }
    let mix = spec.class_separation / (1.0 + spec.class_separation);

    let mut rows: Vec<(usize, Vec<usize>, Vec<f64>)> = Vec::with_capacity(spec.total_samples());
    for (class, &count) in spec.samples_per_class.iter().enumerate() {
        for _ in 0..count {
            let cats = (0..c)
                .map(|f| {
                    if rng.random::<f64>() < mix {
                        favourites[class][f]
                    } else {
                        rng.random_range(0..v)
                    }
                })
                .collect();
            let nums = (0..m).map(|j| means[class][j] + normal(&mut rng)).collect();
            rows.push((class, cats, nums));
        }
    }
    rows.shuffle(&mut rng);

    let mut raw = RawTable {
        categorical_names: (0..c).map(SyntheticSpec::categorical_name).collect(),
        numerical_names: (0..m).map(SyntheticSpec::numerical_name).collect(),
        label_names: (0..spec.n_classes).map(SyntheticSpec::class_name).collect(),
        categorical: Vec::with_capacity(rows.len() * c),
        numerical: Vec::with_capacity(rows.len() * m),
        labels: Vec::with_capacity(rows.len()),
    };
    for (class, cats, nums) in rows {
        raw.categorical.extend(cats.into_iter().map(|x| format!("v{x}")));
        raw.numerical.extend(nums);
        raw.labels.push(class);
    }
    Ok(raw)
}

/// Synthetic dataset with the schema fitted on all generated rows.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, FeatureSchema), DataError> {
    let raw = generate_synthetic_raw(spec)?;
    let schema = FeatureSchema::fit(&raw)?;
    let ds = schema.encode(&raw)?;
    Ok((ds, schema))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rare_class_fraction() {
        let spec = SyntheticSpec::default();
        let (ds, schema) = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.class_counts(), vec![1000, 1000, 1000, 1000, 20]);
        let frac = 20.0 / ds.len() as f64;
        assert!((frac - 0.005).abs() < 0.0002, "{frac}");
        assert_eq!(schema.n_classes(), 5);
        assert_eq!(ds.n_categorical, 4);
        assert_eq!(ds.n_numerical, 4);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec {
            samples_per_class: vec![50, 30, 5, 5, 1],
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic_raw(&spec).unwrap();
        let b = generate_synthetic_raw(&spec).unwrap();
        assert_eq!(a, b);
        let bits = |t: &RawTable| t.numerical.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = generate_synthetic_raw(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_separation_has_no_class_signal() {
        let spec = SyntheticSpec {
            n_classes: 2,
            samples_per_class: vec![4000, 4000],
            n_categorical: 1,
            vocab_size: 4,
            n_numerical: 2,
            class_separation: 0.0,
            seed: 3,
        };
        let raw = generate_synthetic_raw(&spec).unwrap();
        for class in 0..2 {
            let rows: Vec<usize> = (0..raw.n_rows()).filter(|&r| raw.labels[r] == class).collect();
            for j in 0..2 {
                let mean = rows.iter().map(|&r| raw.numerical[r * 2 + j]).sum::<f64>() / rows.len() as f64;
                assert!(mean.abs() < 0.06, "class {class} field {j} mean {mean}");
            }
            for value in ["v0", "v1", "v2", "v3"] {
                let freq = rows.iter().filter(|&&r| raw.categorical[r] == value).count() as f64
                    / rows.len() as f64;
                assert!((freq - 0.25).abs() < 0.03, "class {class} {value} {freq}");
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = SyntheticSpec::default();
        for bad in [
            SyntheticSpec { samples_per_class: vec![1, 0, 1, 1, 1], ..base.clone() },
            SyntheticSpec { class_separation: -1.0, ..base.clone() },
            SyntheticSpec { n_classes: 3, ..base.clone() },
            SyntheticSpec { n_categorical: 0, n_numerical: 0, ..base.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
