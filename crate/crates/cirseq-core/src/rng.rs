//! Reproducible per-replicate random streams.
//!
//! Every replicate draws from a ChaCha stream keyed by the master seed and
//! selected by the replicate index, so results do not depend on scheduling
//! order or degree of parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type ReplicateRng = ChaCha12Rng;

/// Independent stream for replicate `index` under `master_seed`.
pub fn replicate_rng(master_seed: u64, index: u64) -> ReplicateRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    // Stream 0 is reserved for non-replicate draws (e.g. bootstrap).
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Auxiliary stream (bootstrap resampling, shuffling) under `master_seed`.
pub fn auxiliary_rng(master_seed: u64) -> ReplicateRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(0);
    rng
}
