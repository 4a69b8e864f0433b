//! Seed derivation.
//!
//! Every random stream in a run is a ChaCha8 generator keyed by a seed derived
//! from the user seed, a stream tag and an index, so independent streams never
//! share state and adding a stream does not perturb the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_TRIAL: u64 = 1;
pub const STREAM_DEPLOY: u64 = 2;
pub const STREAM_LEADERS: u64 = 3;
pub const STREAM_FAULTS: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(seed, stream, index)` into a fresh 64-bit seed.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
