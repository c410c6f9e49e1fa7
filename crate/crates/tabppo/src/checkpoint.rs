//! JSON checkpoints and the schema sidecar.
//!
//! Floats are written with shortest round-trip formatting and parsed back
//! exactly, so a reloaded model predicts bit-for-bit what the saved one did.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tabppo_core::heads::NetSpec;
use tabppo_core::rl::TrainerState;
use tabppo_core::{FeatureSchema, ParamStore, PolicyValueNet};

use crate::config::TrainerKind;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub trainer: TrainerKind,
    /// Label column of the data the model was trained on, when read from CSV.
    pub label_column: Option<String>,
    pub schema: FeatureSchema,
    pub spec: NetSpec,
    pub params: ParamStore,
    pub state: TrainerState,
}

impl Checkpoint {
    pub fn new(
        trainer: TrainerKind,
        label_column: Option<String>,
        schema: FeatureSchema,
        net: &PolicyValueNet,
        state: TrainerState,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            trainer,
            label_column,
            schema,
            spec: net.spec().clone(),
            params: net.params().clone(),
            state,
        }
    }

    pub fn net(&self) -> Result<PolicyValueNet> {
        Ok(PolicyValueNet::from_params(self.spec.clone(), self.params.clone())?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = read_json(path)?;
        if ck.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint {
                path: path.to_path_buf(),
                message: format!("unsupported format version {}", ck.format_version),
            });
        }
        let expected = NetSpec::for_schema(ck.spec.encoder.clone(), &ck.schema);
        if expected != ck.spec {
            return Err(Error::Checkpoint {
                path: path.to_path_buf(),
                message: "network spec does not match the stored schema".into(),
            });
        }
        Ok(ck)
    }
}

pub fn save_schema(path: &Path, schema: &FeatureSchema) -> Result<()> {
    write_json(path, schema)
}

pub fn load_schema(path: &Path) -> Result<FeatureSchema> {
    let schema: FeatureSchema = read_json(path)?;
    schema.validate()?;
    Ok(schema)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(Error::io(path))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
