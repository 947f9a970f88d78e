//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha20 (`rand_chacha`), keyed
//! by a 64-bit seed and split into independent streams by the ChaCha stream
//! id. The output is identical across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Recorded in run metadata so other implementations can reproduce streams.
pub const RNG_ALGORITHM: &str = "ChaCha20Rng(seed_from_u64, stream id) via rand_chacha 0.9";

/// Stream ids reserved for the different consumers of a seed.
pub mod streams {
    pub const POOL_INIT: u64 = 1;
    pub const MIXTURE: u64 = 2;
    pub const BAYES_MC: u64 = 3;
    pub const KMEANS: u64 = 4;
    pub const TRAIN_SPLIT: u64 = 10;
    pub const CALIB_SPLIT: u64 = 11;
    pub const TEST_SPLIT: u64 = 12;
}

pub fn stream(seed: u64, stream_id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
