//! Deterministic random streams.
//!
//! Every independent task (a bootstrap draw, a simulation replicate) gets its
//! own ChaCha stream keyed by a master seed and a path of integer tags, so
//! results never depend on execution order or thread count.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a sequence of tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)))
}

/// Random stream for the task identified by `tags` under `seed`.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

/// Tag namespaces, so streams for different purposes never collide.
pub mod tag {
    pub const BOOTSTRAP: u64 = 1;
    pub const REPLICATE: u64 = 2;
    pub const PROJECTIONS: u64 = 3;
    pub const SAMPLE: u64 = 4;
}
