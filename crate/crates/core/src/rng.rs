//! Random number generation.
//!
//! All randomness flows through [`ChaCha8Rng`], whose output stream is fixed by
//! the ChaCha8 algorithm and documented as value-stable by `rand_chacha`.
//! Normal deviates come from `rand_distr::Normal`. Per-item streams are derived
//! with [`sub_seed`] so parallel work stays reproducible.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser applied to `master ^ golden·(index + 1)`.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
