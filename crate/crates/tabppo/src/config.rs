//! Run configuration: one TOML file, with command-line overrides on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tabppo_core::rl::CeConfig;
use tabppo_core::{EncoderConfig, EncoderKind, PpoConfig, RewardConfig, SyntheticSpec};

use crate::csvio::SchemaHints;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TrainerKind {
    #[default]
    Ppo,
    Ce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default)]
        hints: SchemaHints,
    },
    Synthetic(SyntheticSpec),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticSpec::default())
    }
}

/// Settings of the cross-entropy baseline. Unset values follow `[ppo]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CeSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minibatch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_grad_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub epochs: usize,
    pub train_fraction: f64,
    pub trainer: TrainerKind,
    pub out_dir: PathBuf,
    pub data: DataSource,
    pub encoder: EncoderConfig,
    pub reward: RewardConfig,
    pub ppo: PpoConfig,
    pub ce: CeSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 10,
            train_fraction: 0.8,
            trainer: TrainerKind::Ppo,
            out_dir: PathBuf::from("runs/latest"),
            data: DataSource::default(),
            encoder: EncoderConfig::default(),
            reward: RewardConfig::default(),
            ppo: PpoConfig::default(),
            ce: CeSettings::default(),
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub label_column: Option<String>,
    pub trainer: Option<TrainerKind>,
    pub encoder: Option<EncoderKind>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable in TOML")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(path) = &o.data {
            let label_column = match (&o.label_column, &self.data) {
                (Some(l), _) => l.clone(),
                (None, DataSource::Csv { label_column, .. }) => label_column.clone(),
                (None, DataSource::Synthetic(_)) => {
                    return Err(Error::Config("--data needs --label-column".into()));
                }
            };
            let hints = match &self.data {
                DataSource::Csv { hints, .. } => hints.clone(),
                DataSource::Synthetic(_) => SchemaHints::default(),
            };
            self.data = DataSource::Csv {
                path: path.clone(),
                label_column,
                hints,
            };
        } else if let Some(l) = &o.label_column {
            match &mut self.data {
                DataSource::Csv { label_column, .. } => *label_column = l.clone(),
                DataSource::Synthetic(_) => {
                    return Err(Error::Config("--label-column only applies to CSV data".into()));
                }
            }
        }
        if let Some(t) = o.trainer {
            self.trainer = t;
        }
        if let Some(k) = o.encoder {
            self.encoder.kind = k;
        }
        if let Some(s) = o.seed {
            self.seed = s;
            if let DataSource::Synthetic(spec) = &mut self.data {
                spec.seed = s;
            }
        }
        if let Some(e) = o.epochs {
            self.epochs = e;
        }
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
        }
        self.encoder.validate()?;
        self.reward.validate()?;
        self.ppo.validate()?;
        let ce = self.ce_config();
        if !(ce.learning_rate.is_finite() && ce.learning_rate >= 0.0) || ce.minibatch_size == 0 || !(ce.max_grad_norm > 0.0) {
            return Err(Error::Config("ce settings must have a nonnegative rate, positive batch and clip norm".into()));
        }
        match &self.data {
            DataSource::Csv { path, label_column, .. } => {
                if path.as_os_str().is_empty() || label_column.is_empty() {
                    return Err(Error::Config("csv data needs a path and a label column".into()));
                }
            }
            DataSource::Synthetic(spec) => spec.validate().map_err(|e| Error::Config(e.to_string()))?,
        }
        Ok(())
    }

    pub fn ce_config(&self) -> CeConfig {
        CeConfig {
            learning_rate: self.ce.learning_rate.unwrap_or(self.ppo.learning_rate),
            minibatch_size: self.ce.minibatch_size.unwrap_or(self.ppo.minibatch_size),
            max_grad_norm: self.ce.max_grad_norm.unwrap_or(self.ppo.max_grad_norm),
        }
    }

    /// Writes every default out explicitly so the file alone reproduces the
    /// run.
    pub fn materialize(&mut self) {
        self.ppo.episode_length = Some(self.ppo.episode_length());
        let ce = self.ce_config();
        self.ce = CeSettings {
            learning_rate: Some(ce.learning_rate),
            minibatch_size: Some(ce.minibatch_size),
            max_grad_norm: Some(ce.max_grad_norm),
        };
        if let DataSource::Csv { path, .. } = &mut self.data {
            if let Ok(abs) = std::fs::canonicalize(&*path) {
                *path = abs;
            }
        }
    }
}
