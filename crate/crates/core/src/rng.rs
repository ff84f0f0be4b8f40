//! Named random sub-streams derived from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_SKETCH: u64 = 1;
pub const TAG_SWAP: u64 = 2;
pub const TAG_REMOVE: u64 = 3;
pub const TAG_PHASE: u64 = 4;
pub const TAG_TRACKER: u64 = 5;
pub const TAG_ORDER: u64 = 6;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `(seed, tag, index)`. Distinct triples give independent streams.
pub fn substream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let s = splitmix(splitmix(splitmix(seed) ^ tag) ^ index);
    ChaCha8Rng::seed_from_u64(s)
}
