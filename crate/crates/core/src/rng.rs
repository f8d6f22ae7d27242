//! Reproducible random streams.
//!
//! Every random object in the crate is a pure function of a master seed and a
//! stream index. Sample `i` of a Monte Carlo batch always draws from stream
//! `i`, so results do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `stream` of the ChaCha8 generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive an independent master seed for a named sub-experiment.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    use rand::RngCore;
    stream(seed ^ 0x5eed_0000_0000_0000, tag).next_u64()
}

/// Zigzag-encode a lattice site so negative sites get their own streams.
pub(crate) fn site_key(x: i64) -> u64 {
    ((x << 1) ^ (x >> 63)) as u64
}
