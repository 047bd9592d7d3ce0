//! Seed-stream derivation.
//!
//! All randomness in the crate flows from a single master seed through
//! ChaCha8 streams: stream `i` of seed `s` is an independent generator, so
//! per-permutation, per-repeat, and per-realisation RNGs can be derived by
//! index and consumed in parallel without any draw-order coupling between
//! work items. (ChaCha8 is used for speed; the statistical quality is far
//! beyond what permutation testing needs.)

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of the given master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A fresh 64-bit seed derived from (seed, stream), for nested stream trees.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}
