//! The one pseudo-random generator every seeded operation draws from.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in run manifests so outputs can be tied to a generator.
pub const PRNG_NAME: &str = "ChaCha8Rng/seed_from_u64 (rand_chacha 0.9), v1";

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for a sub-task (a node, a sweep step) of a seeded run.
pub fn derive(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed
        ^ stream
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
