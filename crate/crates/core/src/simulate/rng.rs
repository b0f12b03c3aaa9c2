//! Per-path random streams.
//!
//! Path `i` of a batch draws from ChaCha8 keyed by `master_seed` on stream `i`,
//! so any path can be regenerated alone and the assignment of paths to worker
//! threads has no effect on the values produced.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// Independent generator for path `path_index` of the batch seeded by `master_seed`.
pub fn path_rng(master_seed: u64, path_index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Seed for a labelled sub-experiment (SplitMix64 finalizer over `master_seed ^ tag`).
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    let mut z = master_seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
