//! Deterministic seed derivation.
//!
//! Every randomized routine takes a `u64` seed and derives independent
//! sub-streams with [`derive`]; parallel fan-outs give each worker its own
//! derived seed and merge with order-independent reductions (max/min), so
//! results do not depend on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a parent seed, a routine tag, and a stream index into a child seed.
pub fn derive(seed: u64, tag: &str, stream: u64) -> u64 {
    let mut h = splitmix64(seed);
    for &b in tag.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ stream)
}

/// Deterministic generator for a derived stream.
pub fn rng(seed: u64, tag: &str, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, stream))
}
