//! Deterministic random sub-streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from the master
//! seed and a short tag path, so results do not depend on evaluation order or
//! on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const FADING: u64 = 1;
    pub const EXTRACT_F1: u64 = 2;
    pub const EXTRACT_F2: u64 = 3;
    pub const EA: u64 = 4;
    pub const MCMA: u64 = 5;
    pub const GENERATOR: u64 = 6;
}

fn mix(mut h: u64, v: u64) -> u64 {
    // splitmix64 finaliser over the running hash
    h ^= v.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    let mut z = h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream identifier for a tag path.
pub fn stream_id(tags: &[u64]) -> u64 {
    tags.iter().fold(0x5eed_0f_5eed, |h, &t| mix(h, t))
}

/// A generator seeded by `seed` and positioned on the stream named by `tags`.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(tags));
    rng
}
