//! Seeded generators. Each chain owns one; a replicate in a study derives
//! its seed as `base_seed + r`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type ChainRng = ChaCha20Rng;

/// Stream used by the sampler.
pub const CHAIN_STREAM: u64 = 0;
/// Stream used by the data generators, so that data and chain draws never
/// overlap for the same seed.
pub const DATA_STREAM: u64 = 1;

pub fn seeded(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
