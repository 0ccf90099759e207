//! Seeded generators and the seed-splitting rule used for independent jobs.
//!
//! Every stochastic routine draws from `ChaCha8Rng::seed_from_u64(seed)`.
//! Child seeds for trial `i` of a run seeded with `master` are
//! `splitmix64(master ^ splitmix64(i + 1))`, so a job's stream depends only on
//! `(master, i)` and never on scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64); child seeds via splitmix64(master ^ splitmix64(index + 1))";

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}
