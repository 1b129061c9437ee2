//! Stream sketches: a reservoir sampler and a stable Bloom filter, plus the
//! seeded randomness and Murmur3 hashing they rely on.

pub mod bloom;
pub mod murmur3;
mod reservoir;
mod rng;

use thiserror::Error;

pub use bloom::{derive_num_filters, hash_bit_index, ResetPolicy, StableBloomFilter};
pub use reservoir::{AddOutcome, ReservoirSampler};
pub use rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("reservoir capacity must be at least 1")]
    ZeroCapacity,
    #[error("false-positive threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("{total_bits} bits cannot hold {num_filters} sub-filters")]
    TooFewBits {
        total_bits: usize,
        num_filters: usize,
    },
}
