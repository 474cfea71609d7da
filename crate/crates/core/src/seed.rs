//! Deterministic seed derivation.
//!
//! Every random stream in the workbench is a pure function of a master seed
//! plus a handful of integer tags (scenario index, trial index, purpose).
//! Derivation uses splitmix64 steps, which is enough mixing to decorrelate
//! neighbouring tags.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with up to three tags into a new 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for &tag in tags {
        state ^= tag;
        out ^= splitmix64(&mut state);
    }
    out
}

/// A seeded deterministic RNG for the given master seed and tags.
pub fn rng_for(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

/// Purpose tags so independent streams never collide.
pub mod tag {
    pub const WORKSPACE: u64 = 0x01;
    pub const SCENARIO: u64 = 0x02;
    pub const POINT_CLOUD: u64 = 0x03;
    pub const PLAN: u64 = 0x04;
    pub const TRAIN: u64 = 0x05;
    pub const MODEL_INIT: u64 = 0x06;
}
