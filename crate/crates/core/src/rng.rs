//! Named random sub-streams derived from a single run seed.
//!
//! Each consumer of randomness gets its own ChaCha stream so that, for
//! example, changing the number of sampled actions never perturbs the data
//! split or the parameter initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Init = 2,
    Sampling = 3,
    Shuffle = 4,
    Synthetic = 5,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
