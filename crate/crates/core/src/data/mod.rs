//! Dataset schema, preprocessing, stratified splitting, batching and the
//! synthetic imbalanced-data generator.

mod batch;
mod schema;
mod split;
mod synthetic;

use alloc::string::String;
use alloc::vec::Vec;

pub use batch::{iterate_batches, Batch};
pub use schema::{CategoricalField, FeatureSchema, NumericalField, UNKNOWN_INDEX};
pub use split::{split, stratified_indices, SplitIndices};
pub use synthetic::{generate_synthetic, generate_synthetic_raw, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate field name `{0}`")]
    DuplicateField(String),
    #[error("input has no data rows")]
    Empty,
    #[error("row {row}: column `{column}` has unparseable numeric value `{value}`")]
    BadNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label `{label}` is not in the schema")]
    UnknownLabel { row: usize, label: String },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(&'static str),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("batch size must be at least 1")]
    InvalidBatchSize,
    #[error("schema mismatch: {}", .0.join("; "))]
    SchemaMismatch(Vec<String>),
    #[error("{0}")]
    Invalid(String),
}

/// A stratified split with preprocessing fitted on the train rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub schema: FeatureSchema,
    pub train: Dataset,
    pub test: Dataset,
    /// Classes with fewer than two samples; all of them land in `train`.
    pub undersized_classes: Vec<usize>,
}

/// Splits `raw`, fits vocabularies and standardization on the train part
/// and encodes both parts with that schema.
pub fn prepare(raw: &RawTable, train_fraction: f64, seed: u64) -> Result<Prepared, DataError> {
    if raw.n_rows() == 0 {
        return Err(DataError::Empty);
    }
    let idx = stratified_indices(&raw.labels, raw.label_names.len(), train_fraction, seed)?;
    let train_raw = raw.select(&idx.train);
    let schema = FeatureSchema::fit(&train_raw)?;
    let train = schema.encode(&train_raw)?;
    let test = schema.encode(&raw.select(&idx.test))?;
    Ok(Prepared {
        schema,
        train,
        test,
        undersized_classes: idx.undersized_classes,
    })
}

/// Un-encoded table: categorical values as strings, numericals as parsed
/// but unstandardized reals, labels as indices into `label_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub categorical_names: Vec<String>,
    pub numerical_names: Vec<String>,
    pub label_names: Vec<String>,
    /// Row-major `[rows × categorical_names.len()]`.
    pub categorical: Vec<String>,
    /// Row-major `[rows × numerical_names.len()]`.
    pub numerical: Vec<f64>,
    pub labels: Vec<usize>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn select(&self, rows: &[usize]) -> RawTable {
        let (c, m) = (self.categorical_names.len(), self.numerical_names.len());
        let mut out = RawTable {
            categorical_names: self.categorical_names.clone(),
            numerical_names: self.numerical_names.clone(),
            label_names: self.label_names.clone(),
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

/// Encoded dataset: vocabulary indices, standardized numericals, labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_categorical: usize,
    pub n_numerical: usize,
    pub n_classes: usize,
    /// Row-major `[len × n_categorical]`.
    pub categorical: Vec<usize>,
    /// Row-major `[len × n_numerical]`.
    pub numerical: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        let (c, m) = (self.n_categorical, self.n_numerical);
        let mut out = Dataset {
            n_categorical: c,
            n_numerical: m,
            n_classes: self.n_classes,
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

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> Batch {
        Batch {
            n_categorical: self.n_categorical,
            n_numerical: self.n_numerical,
            categorical: self.categorical.clone(),
            numerical: self.numerical.clone(),
            labels: self.labels.clone(),
        }
    }
}
