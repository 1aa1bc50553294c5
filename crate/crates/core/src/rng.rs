//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator whose 64-bit seed
//! is derived from the master seed and a path of integer tags (for example
//! `[FOREST, repeat, fold, tree]`) through SplitMix64 mixing. ChaCha8 output is
//! specified bit-for-bit, so a (seed, tags) pair yields the same stream on
//! every platform and independently of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_FOLDS: u64 = 0x464f_4c44;
pub const TAG_FOREST: u64 = 0x4652_5354;
pub const TAG_SYNTH: u64 = 0x5359_4e54;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`, one SplitMix64 round per tag.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}
