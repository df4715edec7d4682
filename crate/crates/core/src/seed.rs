//! Counter-based random streams: work item `i` of a run seeded with `s`
//! always draws from stream `i` of ChaCha8 keyed by `s`, independent of
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent seed for a named sub-experiment.
pub fn derive(seed: u64, tag: u64) -> u64 {
    use rand::RngCore;
    stream(seed ^ 0x9e37_79b9_7f4a_7c15, tag).next_u64()
}
