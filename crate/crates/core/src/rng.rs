//! Seed derivation for independent, schedule-free random streams.
//!
//! Trial `t` of a run with master seed `s` uses the 64-bit seed
//! `split_seed(s, t)`: the SplitMix64 finalizer applied to
//! `mix(s) ^ (t · 0x9E3779B97F4A7C15)`. Each seed initializes a ChaCha8
//! generator; stream 0 drives the protocol and stream 1 draws the true
//! phase, so a trial can be replayed from its seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub(crate) const PROTOCOL_STREAM: u64 = 0;
pub(crate) const PHASE_STREAM: u64 = 1;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
