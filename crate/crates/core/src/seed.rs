//! Deterministic seed streams.
//!
//! Every random draw is keyed by a path of integers below a master seed
//! (repetition, iteration, purpose, parameter, sign), so reruns are
//! bit-identical and independent streams never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout.
pub type SimRng = ChaCha8Rng;

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed of `master` along `path`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &x| mix(mix(acc) ^ x))
}

pub fn rng_for(master: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, path))
}
