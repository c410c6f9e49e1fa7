//! PPO training over classification decisions, plus the cross-entropy
//! baseline.
//!
//! Every training batch is treated as one episode: the policy labels the
//! rows in order, each decision is rewarded, the episode terminates after
//! the last row, and advantages come from generalized advantage estimation
//! over that sequence.

mod adam;
mod gae;
mod ppo;
mod trainer;

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::data::DataError;
use crate::error::ConfigError;
use crate::metrics::MetricsError;
use crate::numcore::TensorError;

pub use adam::{clip_grad_norm, Adam};
pub use gae::{compute_gae, estimate_advantages, normalize_advantages};
pub use ppo::{
    clipped_surrogate, collect_trajectory, ppo_loss, ppo_update, MinibatchStats, PpoLoss, UpdateStats,
};
pub use trainer::{
    ce_epoch, evaluate, ppo_epoch, predict_dataset, train_cross_entropy, train_ppo, CeConfig,
    TrainerState,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub ppo_epochs: usize,
    pub minibatch_size: usize,
    pub discount: f64,
    pub gae_lambda: f64,
    pub value_loss_coef: f64,
    pub entropy_coef: f64,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
    /// Rows per episode; defaults to `minibatch_size`.
    pub episode_length: Option<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            ppo_epochs: 4,
            minibatch_size: 256,
            discount: 0.99,
            gae_lambda: 0.95,
            value_loss_coef: 0.5,
            entropy_coef: 0.0,
            learning_rate: 3e-4,
            max_grad_norm: 1.0,
            episode_length: None,
        }
    }
}

impl PpoConfig {
    pub fn episode_length(&self) -> usize {
        self.episode_length.unwrap_or(self.minibatch_size)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::new(format!("ppo.{msg}")));
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon must lie in (0, 1)");
        }
        if self.ppo_epochs == 0 {
            return bad("ppo_epochs must be at least 1");
        }
        if self.minibatch_size == 0 || self.episode_length() == 0 {
            return bad("minibatch_size and episode_length must be positive");
        }
        if !(0.0..=1.0).contains(&self.discount) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("discount and gae_lambda must lie in [0, 1]");
        }
        for (name, v) in [
            ("value_loss_coef", self.value_loss_coef),
            ("entropy_coef", self.entropy_coef),
            ("learning_rate", self.learning_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::new(format!("ppo.{name} must be finite and nonnegative")));
            }
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        Ok(())
    }
}

/// One classification decision inside an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Row of the episode batch holding the state features.
    pub row: usize,
    pub action: usize,
    pub old_log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub advantage: f64,
    pub return_target: f64,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_reward: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: Option<f64>,
    pub clip_fraction: Option<f64>,
    pub entropy: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub test_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(
        "non-finite loss at epoch {epoch}, batch {batch}, optimizer step {step} (parameter norm {param_norm})"
    )]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        step: u64,
        param_norm: f64,
    },
}

impl RlError {
    pub(crate) fn at(self, epoch_no: usize, batch_no: usize) -> Self {
        match self {
            RlError::NonFiniteLoss { step, param_norm, .. } => RlError::NonFiniteLoss {
                epoch: epoch_no,
                batch: batch_no,
                step,
                param_norm,
            },
            other => other,
        }
    }
}
