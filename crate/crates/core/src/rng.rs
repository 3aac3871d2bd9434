//! Seeded randomness. Every random choice in the crate flows through here so
//! that equal seeds give equal streams, matrices and trees on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent child seed for sub-component `slot` of a seeded parent.
pub fn derive_seed(seed: u64, slot: u64) -> u64 {
    mix64(seed ^ mix64(slot.wrapping_add(1)))
}
