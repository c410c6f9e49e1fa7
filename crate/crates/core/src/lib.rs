//! Tabular transformer intrusion detector trained with proximal policy
//! optimization.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the
//! algorithmic pieces: a small reverse-mode autodiff engine, dataset
//! preprocessing, the encoder and policy/value heads, the composite reward,
//! the PPO and cross-entropy trainers, and multi-class metrics. File formats
//! and the command line live in the `tabppo` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod encoder;
pub mod error;
pub mod heads;
pub mod math;
pub mod metrics;
pub mod numcore;
pub mod reward;
pub mod rl;
pub mod rng;

pub use data::{Batch, Dataset, FeatureSchema, RawTable, SyntheticSpec};
pub use encoder::{EncoderConfig, EncoderKind};
pub use error::ConfigError;
pub use heads::{ActionOutput, PolicyValueNet};
pub use metrics::{ClassReport, ConfusionMatrix};
pub use numcore::{Graph, ParamId, ParamStore, Tensor, TensorError, Var};
pub use reward::{MistakeWindow, RewardConfig};
pub use rl::{EpochMetrics, PpoConfig, Transition};
