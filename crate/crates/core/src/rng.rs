//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by a
//! 64-bit seed. Independent purposes (data for `Q`, data for `P`, parameter
//! initialization, minibatch shuffling, ...) use distinct ChaCha stream ids
//! under the same key, and per-run seeds are derived from an experiment seed
//! with a SplitMix64 finalizer. Both steps are pure functions of their inputs,
//! so any run reproduces from `(seed, purpose)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Identifier recorded in sample provenance.
pub const RNG_ALGORITHM: &str = "chacha20";

/// What a random stream is used for. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Sample = 0,
    QData = 1,
    PData = 2,
    Init = 3,
    Shuffle = 4,
    Embedding = 5,
    Pairing = 6,
    Params = 7,
}

/// A generator for `purpose` under `seed`.
pub fn stream(seed: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Child seed number `index` of `parent` (SplitMix64 of the combined words).
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
