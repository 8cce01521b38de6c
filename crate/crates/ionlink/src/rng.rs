//! Deterministic substreams.
//!
//! Algorithm: ChaCha8 (rand_chacha). A substream is the generator seeded from
//! the master seed with its 64-bit stream id set to the trial key, so any trial
//! can be regenerated in isolation and workers can be scheduled freely.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub const ALGORITHM: &str = "ChaCha8";

pub fn substream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Two-level key (e.g. input state, herald index) folded into one stream id.
pub fn substream2(master_seed: u64, outer: u32, inner: u32) -> ChaCha8Rng {
    substream(master_seed, ((outer as u64) << 32) | inner as u64)
}
