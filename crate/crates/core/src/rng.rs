//! Seedable generator used by every randomized step.
//!
//! All randomness flows from a 64-bit seed. Per-epoch and per-purpose
//! streams are derived by hashing `(seed, stream)` through a SplitMix64
//! finalizer, so plans for epoch `e` never depend on how many draws were
//! made in epoch `e - 1`.

use rand::SeedableRng;
use rand_pcg::Pcg32;

/// Generator type: PCG-XSH-RR with 64-bit state.
pub type ShuffleRng = Pcg32;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed for `stream` from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng_from_seed(seed: u64) -> ShuffleRng {
    ShuffleRng::seed_from_u64(seed)
}

/// Stream tags so that different consumers of one seed do not collide.
pub mod stream {
    pub const GENERATOR: u64 = 0x6765_6e00;
    pub const BMF_SPLIT: u64 = 0x626d_6600;
    pub const EPOCH_BASE: u64 = 0x6570_0000_0000;
}

/// Generator for one epoch of plan construction.
pub fn epoch_rng(seed: u64, epoch: usize) -> ShuffleRng {
    rng_from_seed(derive_seed(seed, stream::EPOCH_BASE + epoch as u64))
}
