//! Counter-based random substreams.
//!
//! A stream is keyed by a master seed and a short path of integers (grid
//! point, trial, purpose). Keys are mixed with splitmix64 into a ChaCha8 seed,
//! so any trial can be regenerated without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purposes used across the crate.
pub mod purpose {
    pub const MESSAGE: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const CONSTRUCTION: u64 = 3;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the stream identified by `master` and `path`.
pub fn substream(master: u64, path: &[u64]) -> StreamRng {
    let mut h = splitmix64(master);
    let mut seed = [0u8; 32];
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    for chunk in seed.chunks_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
