#![allow(dead_code)]

use std::path::Path;

use tabppo::config::{DataSource, RunConfig};
use tabppo_core::{EncoderConfig, EncoderKind, SyntheticSpec};

pub fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_classes: 3,
        samples_per_class: vec![60, 60, 20],
        n_categorical: 2,
        vocab_size: 4,
        n_numerical: 3,
        class_separation: 4.0,
        seed,
    }
}

/// A run that finishes in well under a second.
pub fn small_config(out: &Path, epochs: usize) -> RunConfig {
    let mut cfg = RunConfig {
        epochs,
        out_dir: out.to_path_buf(),
        data: DataSource::Synthetic(small_spec(3)),
        encoder: EncoderConfig {
            embed_dim: 8,
            n_layers: 1,
            n_heads: 2,
            ffn_hidden: 16,
            kind: EncoderKind::Transformer,
        },
        ..RunConfig::default()
    };
    cfg.ppo.minibatch_size = 16;
    cfg.ppo.learning_rate = 3e-3;
    cfg.ppo.discount = 0.5;
    cfg
}

pub fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}
