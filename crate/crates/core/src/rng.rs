//! Seeded random streams.
//!
//! Every random quantity in a run is drawn from a ChaCha stream whose seed is
//! derived from the master seed and a list of tags (repetition index,
//! processing gain, purpose). Adding repetitions or processing gains never
//! shifts the streams of existing runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const TAG_NETWORK: u64 = 0x6e65_7477;
pub const TAG_SPREADING: u64 = 0x7370_7264;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based seed split: mixes each tag into the running state.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}
