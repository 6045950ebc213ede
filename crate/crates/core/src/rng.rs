//! Deterministic random substreams.
//!
//! Every random draw in the crate comes from a ChaCha generator keyed by a
//! root seed and a small tuple of coordinates (exposure, period, block...).
//! Results therefore do not depend on how work is split between threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A generator for the stream addressed by `coords` under `seed`.
pub fn substream(seed: u64, coords: &[u64]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed);
    for &c in coords {
        state = splitmix64(state ^ splitmix64(c.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    for chunk in key.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
