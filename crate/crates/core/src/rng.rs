//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), seeded
//! with a 64-bit seed and a fixed stream id per purpose. ChaCha8 output is
//! specified independently of platform and word size, so index lists and
//! initial weights are reproducible anywhere the same seed is used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Distinct purposes get distinct ChaCha streams under the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Subsample = 2,
    Init = 3,
    Shuffle = 4,
    Deletion = 5,
    Trees = 6,
    Synth = 7,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Stream for the `index`-th member of a family (e.g. tree `i` of a forest).
pub fn indexed_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | (index & 0xffff_ffff));
    rng
}
