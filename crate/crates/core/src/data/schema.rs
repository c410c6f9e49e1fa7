use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, RawTable};
use crate::math;

/// Vocabulary slot for values never seen while fitting.
pub const UNKNOWN_INDEX: usize = 0;

const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalField {
    pub name: String,
    /// Value to index; indices start at 1.
    pub vocabulary: BTreeMap<String, usize>,
}

impl CategoricalField {
    /// Number of embedding rows, including the unknown slot.
    pub fn size(&self) -> usize {
        self.vocabulary.len() + 1
    }

    pub fn index_of(&self, value: &str) -> usize {
        self.vocabulary.get(value).copied().unwrap_or(UNKNOWN_INDEX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericalField {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

impl NumericalField {
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn destandardize(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Field order, vocabularies, standardization statistics and label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub categorical: Vec<CategoricalField>,
    pub numerical: Vec<NumericalField>,
    pub labels: Vec<String>,
}

impl FeatureSchema {
    /// Fits vocabularies and standardization statistics on `raw`.
    ///
    /// Vocabulary indices follow lexicographic value order. Constant numeric
    /// columns get a standard deviation of 1.
    pub fn fit(raw: &RawTable) -> Result<Self, DataError> {
        if raw.n_rows() == 0 {
            return Err(DataError::Empty);
        }
        let (c, m) = (raw.categorical_names.len(), raw.numerical_names.len());
        let mut categorical = Vec::with_capacity(c);
        for (f, name) in raw.categorical_names.iter().enumerate() {
            let values: BTreeSet<&str> = (0..raw.n_rows())
                .map(|r| raw.categorical[r * c + f].as_str())
                .collect();
            let vocabulary = values
                .into_iter()
                .enumerate()
                .map(|(i, v)| (String::from(v), i + 1))
                .collect();
            categorical.push(CategoricalField {
                name: name.clone(),
                vocabulary,
            });
        }
        let mut numerical = Vec::with_capacity(m);
        let mut column = Vec::with_capacity(raw.n_rows());
        for (j, name) in raw.numerical_names.iter().enumerate() {
            column.clear();
            column.extend((0..raw.n_rows()).map(|r| raw.numerical[r * m + j]));
            let (mean, std) = math::mean_std(&column);
            numerical.push(NumericalField {
                name: name.clone(),
                mean,
                std: if std > MIN_STD { std } else { 1.0 },
            });
        }
        let schema = FeatureSchema {
            categorical,
            numerical,
            labels: raw.label_names.clone(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let mut seen = BTreeSet::new();
        for name in self.field_names() {
            if !seen.insert(name) {
                return Err(DataError::DuplicateField(String::from(name)));
            }
        }
        if self.labels.is_empty() {
            return Err(DataError::Invalid(String::from("schema has no labels")));
        }
        if self.categorical.is_empty() && self.numerical.is_empty() {
            return Err(DataError::Invalid(String::from("schema has no feature fields")));
        }
        for f in &self.categorical {
            if f.vocabulary.values().any(|&i| i == UNKNOWN_INDEX || i >= f.size()) {
                return Err(DataError::Invalid(format!("field `{}` has an invalid vocabulary", f.name)));
            }
        }
        for f in &self.numerical {
            if !(f.std > 0.0 && f.std.is_finite() && f.mean.is_finite()) {
                return Err(DataError::Invalid(format!("field `{}` has invalid statistics", f.name)));
            }
        }
        Ok(())
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.categorical
            .iter()
            .map(|f| f.name.as_str())
            .chain(self.numerical.iter().map(|f| f.name.as_str()))
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn vocab_sizes(&self) -> Vec<usize> {
        self.categorical.iter().map(CategoricalField::size).collect()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Encodes a raw table. Field order in `raw` must match the schema;
    /// unseen categorical values map to [`UNKNOWN_INDEX`].
    pub fn encode(&self, raw: &RawTable) -> Result<Dataset, DataError> {
        let diff = self.diff_fields(raw);
        if !diff.is_empty() {
            return Err(DataError::SchemaMismatch(diff));
        }
        let (c, m) = (self.categorical.len(), self.numerical.len());
        let n = raw.n_rows();
        let mut categorical = Vec::with_capacity(n * c);
        let mut numerical = Vec::with_capacity(n * m);
        for r in 0..n {
            for (f, field) in self.categorical.iter().enumerate() {
                categorical.push(field.index_of(&raw.categorical[r * c + f]));
            }
            for (j, field) in self.numerical.iter().enumerate() {
                numerical.push(field.standardize(raw.numerical[r * m + j]));
            }
        }
        let mut labels = Vec::with_capacity(n);
        for (r, &l) in raw.labels.iter().enumerate() {
            let name = &raw.label_names[l];
            let idx = self.label_index(name).ok_or_else(|| DataError::UnknownLabel {
                row: r,
                label: name.clone(),
            })?;
            labels.push(idx);
        }
        Ok(Dataset {
            n_categorical: c,
            n_numerical: m,
            n_classes: self.labels.len(),
            categorical,
            numerical,
            labels,
        })
    }

    fn diff_fields(&self, raw: &RawTable) -> Vec<String> {
        let mut diff = Vec::new();
        let ours: Vec<&str> = self.categorical.iter().map(|f| f.name.as_str()).collect();
        let theirs: Vec<&str> = raw.categorical_names.iter().map(String::as_str).collect();
        list_diff("categorical", &ours, &theirs, &mut diff);
        let ours: Vec<&str> = self.numerical.iter().map(|f| f.name.as_str()).collect();
        let theirs: Vec<&str> = raw.numerical_names.iter().map(String::as_str).collect();
        list_diff("numerical", &ours, &theirs, &mut diff);
        diff
    }

    /// Field-level differences between two schemas, empty when they agree
    /// on field order, vocabulary sizes and labels.
    pub fn diff(&self, other: &FeatureSchema) -> Vec<String> {
        let mut diff = Vec::new();
        let a: Vec<&str> = self.categorical.iter().map(|f| f.name.as_str()).collect();
        let b: Vec<&str> = other.categorical.iter().map(|f| f.name.as_str()).collect();
        list_diff("categorical", &a, &b, &mut diff);
        let a: Vec<&str> = self.numerical.iter().map(|f| f.name.as_str()).collect();
        let b: Vec<&str> = other.numerical.iter().map(|f| f.name.as_str()).collect();
        list_diff("numerical", &a, &b, &mut diff);
        for (x, y) in self.categorical.iter().zip(&other.categorical) {
            if x.name == y.name && x.size() != y.size() {
                diff.push(format!(
                    "categorical `{}`: vocabulary size {} vs {}",
                    x.name,
                    x.size(),
                    y.size()
                ));
            }
        }
        if self.labels != other.labels {
            diff.push(format!("labels: {:?} vs {:?}", self.labels, other.labels));
        }
        diff
    }
}

fn list_diff(kind: &str, expected: &[&str], found: &[&str], out: &mut Vec<String>) {
    for name in expected {
        if !found.contains(name) {
            out.push(format!("{kind} field `{name}` missing"));
        }
    }
    for name in found {
        if !expected.contains(name) {
            out.push(format!("{kind} field `{name}` not in schema"));
        }
    }
    if out.is_empty() && expected != found {
        out.push(format!("{kind} field order differs: {expected:?} vs {found:?}"));
    }
}
