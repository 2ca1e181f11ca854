//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit `u64` seed and derives its
//! generator here, so results do not depend on the host or on thread
//! scheduling. ChaCha8 output is specified independently of platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for a (seed, purpose, index) triple.
pub fn derived(seed: u64, purpose: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
    rng
}
