//! Seeded generators.
//!
//! Every random choice in the crate goes through [`ChaCha8Rng`], whose output
//! stream is fixed by the `rand_chacha` crate independent of platform. Sub-seeds
//! for folds, classes and measurement counts are derived with [`derive_seed`] so
//! results do not depend on scheduling.

pub use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Generator for `seed`.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
