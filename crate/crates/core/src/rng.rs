//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 seeded with
//! `seed_from_u64(seed)` and switched to a per-purpose stream with
//! `set_stream(id)`. A uniform draw on `[lo, hi)` takes one `next_u64`,
//! keeps its top 53 bits as `u = (x >> 11) * 2^-53` and returns
//! `lo + (hi - lo) * u`. Porting these two rules is enough to reproduce
//! every instance and initial guess bit for bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream id used by the solver's initial guess.
pub const STREAM_INIT: u64 = 0x1000;
pub const STREAM_UNIFORM_SOS: u64 = 1;
pub const STREAM_SPIKED: u64 = 2;
pub const STREAM_PERTURBED: u64 = 3;
pub const STREAM_FINE: u64 = 4;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[inline]
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// Uniform integer in `0..bound` by rejection.
pub fn below(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0);
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}
