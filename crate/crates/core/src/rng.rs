//! Seed handling.
//!
//! All randomness is drawn from ChaCha8 keystreams. A generator is identified by
//! a 64-bit seed plus a stream id; distinct stream ids give independent
//! keystreams under the same key, which is how a sketch draws its sign diagonal
//! and its sampled rows without correlation.
//!
//! Consumers that need their own seed (stages of a chained solver, trials of a
//! statistical check) derive it with [`derive_seed`], a SplitMix64 mix of
//! `(seed, label, index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_SIGNS: u64 = 1;
pub const STREAM_ROWS: u64 = 2;
pub const STREAM_SIGNS_SECOND: u64 = 3;
pub const STREAM_PAIRS: u64 = 4;
pub const STREAM_DATA: u64 = 5;

/// Labels used with [`derive_seed`].
pub mod label {
    pub const STAGE: u64 = 0x5354_4147;
    pub const TRIAL: u64 = 0x5452_4941;
    pub const BLOCK: u64 = 0x424c_4f43;
    pub const INNER: u64 = 0x494e_4e52;
    pub const INSTANCE: u64 = 0x494e_5354;
    pub const RHS: u64 = 0x5248_5321;
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, label: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(label)).wrapping_add(index))
}
