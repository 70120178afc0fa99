//! Reproducible random streams.
//!
//! Every random decision in the toolkit draws from ChaCha8 keyed by a 64-bit
//! seed (`ChaCha8Rng::seed_from_u64`, i.e. the seed expanded with PCG32 into a
//! 256-bit key). Independent consumers of one master seed use distinct ChaCha
//! stream ids, so forest tree `t` always reads stream `t + 1` no matter which
//! thread builds it. Integer draws use rejection sampling on `next_u64`, so
//! results depend only on the ChaCha keystream and not on `rand` internals.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream id used for the dataset train/test permutation.
pub const SPLIT_STREAM: u64 = 0;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform integer in `0..bound`. `bound` must be non-zero.
pub fn below(rng: &mut impl RngCore, bound: usize) -> usize {
    debug_assert!(bound > 0);
    let bound = bound as u64;
    // Largest multiple of `bound` representable; draws at or above it are rejected.
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % bound) as usize;
        }
    }
}

/// Fisher–Yates shuffle, iterating from the last position down.
pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
