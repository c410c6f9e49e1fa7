#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabppo_core::encoder::InputShape;
use tabppo_core::heads::NetSpec;
use tabppo_core::{Batch, EncoderConfig, EncoderKind, PolicyValueNet};

pub fn tiny_spec(kind: EncoderKind) -> NetSpec {
    NetSpec {
        encoder: EncoderConfig {
            embed_dim: 4,
            n_layers: 2,
            n_heads: 2,
            ffn_hidden: 6,
            kind,
        },
        input: InputShape {
            vocab_sizes: vec![3, 4],
            n_numerical: 2,
        },
        n_classes: 3,
    }
}

pub fn tiny_net(kind: EncoderKind, seed: u64) -> PolicyValueNet {
    PolicyValueNet::new(tiny_spec(kind), seed).unwrap()
}

/// Random batch matching `spec`.
pub fn random_batch(spec: &NetSpec, rows: usize, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = spec.input.vocab_sizes.len();
    let m = spec.input.n_numerical;
    let mut categorical = Vec::with_capacity(rows * c);
    let mut numerical = Vec::with_capacity(rows * m);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        for &v in &spec.input.vocab_sizes {
            categorical.push(rng.random_range(0..v));
        }
        for _ in 0..m {
            numerical.push(rng.random_range(-2.0..2.0));
        }
        labels.push(rng.random_range(0..spec.n_classes));
    }
    Batch {
        n_categorical: c,
        n_numerical: m,
        categorical,
        numerical,
        labels,
    }
}
