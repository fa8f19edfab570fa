//! Seeded random streams.
//!
//! Every consumer derives its generator from a 64-bit seed and a stream
//! number through ChaCha8's native stream selection, so independent
//! consumers never share state and the layout is stable across runs:
//!
//! | stream               | use                                              |
//! |----------------------|--------------------------------------------------|
//! | `t`                  | signs of the completion drawn for step `t`       |
//! | `MAGNITUDE_BASE + t` | magnitudes of the completion drawn for step `t`  |
//! | `DERIVE_BASE`        | derivation of per-game seeds                     |
//!
//! The Monte Carlo and aligned-fast predictors read the same sign streams,
//! which is what makes their completions identical for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAGNITUDE_BASE: u64 = 1 << 32;
pub const DERIVE_BASE: u64 = 1 << 48;

/// Generator for stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator seeded directly, stream 0.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A child seed for `(seed, index, purpose)`; distinct inputs give
/// independent-looking outputs.
pub fn derive_seed(seed: u64, index: u64, purpose: u64) -> u64 {
    let mut rng = stream(seed, DERIVE_BASE + purpose);
    rng.set_word_pos(u128::from(index) * 2);
    rng.random()
}

/// Uniform ±1 draw.
#[inline]
pub fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
