//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` keyed by the
//! run seed, with the 64-bit stream id split into a purpose tag (high bits)
//! and a chunk index (low 40 bits). Two streams with different ids never
//! overlap, so chunks can be processed on any thread in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Stream;

const CHUNK_BITS: u32 = 40;

/// Purpose tags keep unrelated draws of one run on disjoint streams.
pub mod purpose {
    pub const SAMPLES: u64 = 1;
    pub const REFERENCE: u64 = 2;
    pub const SETUP: u64 = 3;
    pub const HAMILTONIAN: u64 = 4;
    pub const OBSERVABLE: u64 = 5;
    pub const BASIS: u64 = 6;
}

/// Stream `(purpose, chunk)` of the run keyed by `seed`.
pub fn stream(seed: u64, purpose: u64, chunk: u64) -> ChaCha8Rng {
    debug_assert!(chunk < (1 << CHUNK_BITS));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << CHUNK_BITS) | chunk);
    rng
}

/// Derives a child seed, for experiments that run sub-experiments.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, 0xFFFF, index).next_u64()
}
