//! Stable Bloom filter for duplicate detection over unbounded streams.
//!
//! The filter is split into `num_filters` sub-filters, one hash function
//! each. Before a new item's bits are set, a reset may clear one set bit in
//! the most-loaded sub-filter, with probability
//! `min(1, insertions / (fpr_threshold * total_bits))`. Resets are what let
//! the filter ingest an unbounded stream in constant memory; the price is
//! that an item whose bits were cleared can be reported as new again.

use super::murmur3::murmur3_x64_128;
use super::{SeededRng, SketchError};

/// Sub-filter count for a false-positive threshold: `ceil(log2(1/t))`, at
/// least 1.
pub fn derive_num_filters(fpr_threshold: f64) -> Result<usize, SketchError> {
    if !(fpr_threshold > 0.0 && fpr_threshold < 1.0) {
        return Err(SketchError::InvalidThreshold(fpr_threshold));
    }
    Ok(((1.0 / fpr_threshold).log2().ceil() as usize).max(1))
}

/// Bit index of a pre-computed digest in sub-filter `filter_index`, by
/// double hashing: `(h1 + i * h2) mod bits`.
#[inline]
pub fn digest_bit_index(digest: (u64, u64), filter_index: usize, bits_per_filter: usize) -> usize {
    let (h1, h2) = digest;
    (h1.wrapping_add((filter_index as u64).wrapping_mul(h2)) % bits_per_filter as u64) as usize
}

/// Bit index of `item` in sub-filter `filter_index`.
pub fn hash_bit_index(item: &[u8], filter_index: usize, bits_per_filter: usize) -> usize {
    digest_bit_index(murmur3_x64_128(item, 0), filter_index, bits_per_filter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetPolicy {
    Probabilistic,
    /// Never clear bits; the filter degrades to a plain partitioned Bloom filter.
    Disabled,
}

#[derive(Debug, Clone)]
struct BitArray {
    words: Vec<u64>,
    len: usize,
    ones: usize,
}

impl BitArray {
    fn new(len: usize) -> Self {
        BitArray {
            words: vec![0; len.div_ceil(64)],
            len,
            ones: 0,
        }
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize) {
        let w = &mut self.words[i / 64];
        let mask = 1u64 << (i % 64);
        if *w & mask == 0 {
            *w |= mask;
            self.ones += 1;
        }
    }

    #[inline]
    fn clear(&mut self, i: usize) {
        let w = &mut self.words[i / 64];
        let mask = 1u64 << (i % 64);
        if *w & mask != 0 {
            *w &= !mask;
            self.ones -= 1;
        }
    }

    /// Uniformly chosen set bit. Tries rejection sampling first and falls
    /// back to selecting the r-th one bit exactly.
    fn random_one(&self, rng: &mut SeededRng) -> Option<usize> {
        if self.ones == 0 {
            return None;
        }
        for _ in 0..64 {
            let i = rng.index(self.len);
            if self.get(i) {
                return Some(i);
            }
        }
        let mut rank = rng.index(self.ones) as u32;
        for (wi, &w) in self.words.iter().enumerate() {
            let c = w.count_ones();
            if rank < c {
                let mut w = w;
                for _ in 0..rank {
                    w &= w - 1;
                }
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
            rank -= c;
        }
        unreachable!("popcount disagrees with tracked load")
    }
}

/// A cleared bit: `(sub-filter, bit index)`.
pub type ResetRecord = (usize, usize);

#[derive(Debug, Clone)]
pub struct StableBloomFilter {
    total_bits: usize,
    fpr_threshold: f64,
    filters: Vec<BitArray>,
    rng: SeededRng,
    policy: ResetPolicy,
    insertions: u64,
    resets: u64,
    reset_log: Option<Vec<ResetRecord>>,
}

impl StableBloomFilter {
    /// Filter with the sub-filter count derived from the threshold.
    pub fn new(total_bits: usize, fpr_threshold: f64, seed: u64) -> Result<Self, SketchError> {
        let k = derive_num_filters(fpr_threshold)?;
        Self::with_filters(total_bits, k, fpr_threshold, seed)
    }

    /// Filter with an explicit sub-filter count. `total_bits` is spread as
    /// evenly as possible; the first `total_bits % num_filters` sub-filters
    /// get one extra bit.
    pub fn with_filters(
        total_bits: usize,
        num_filters: usize,
        fpr_threshold: f64,
        seed: u64,
    ) -> Result<Self, SketchError> {
        if !(fpr_threshold > 0.0 && fpr_threshold < 1.0) {
            return Err(SketchError::InvalidThreshold(fpr_threshold));
        }
        if num_filters == 0 || total_bits < num_filters {
            return Err(SketchError::TooFewBits {
                total_bits,
                num_filters,
            });
        }
        let base = total_bits / num_filters;
        let extra = total_bits % num_filters;
        let filters = (0..num_filters)
            .map(|i| BitArray::new(base + usize::from(i < extra)))
            .collect();
        Ok(StableBloomFilter {
            total_bits,
            fpr_threshold,
            filters,
            rng: SeededRng::new(seed),
            policy: ResetPolicy::Probabilistic,
            insertions: 0,
            resets: 0,
            reset_log: None,
        })
    }

    pub fn with_reset_policy(mut self, policy: ResetPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Record every cleared bit, for inspection via [`Self::reset_log`].
    pub fn with_reset_log(mut self) -> Self {
        self.reset_log = Some(Vec::new());
        self
    }

    /// Reports whether `item` was (probably) seen before; if not, inserts it.
    pub fn check_and_add(&mut self, item: &[u8]) -> bool {
        self.check_and_add_digest(murmur3_x64_128(item, 0))
    }

    /// As [`Self::check_and_add`], for a caller-computed Murmur3 digest.
    pub fn check_and_add_digest(&mut self, digest: (u64, u64)) -> bool {
        if self.contains_digest(digest) {
            return true;
        }
        if self.policy == ResetPolicy::Probabilistic {
            let p = self.insertions as f64 / (self.fpr_threshold * self.total_bits as f64);
            if self.rng.chance(p) {
                self.reset_one();
            }
        }
        for (i, f) in self.filters.iter_mut().enumerate() {
            let bit = digest_bit_index(digest, i, f.len);
            f.set(bit);
        }
        self.insertions += 1;
        false
    }

    /// Membership query without insertion.
    pub fn contains(&self, item: &[u8]) -> bool {
        self.contains_digest(murmur3_x64_128(item, 0))
    }

    pub fn contains_digest(&self, digest: (u64, u64)) -> bool {
        self.filters
            .iter()
            .enumerate()
            .all(|(i, f)| f.get(digest_bit_index(digest, i, f.len)))
    }

    /// The bit positions `item` maps to, one per sub-filter.
    pub fn positions(&self, item: &[u8]) -> Vec<usize> {
        let digest = murmur3_x64_128(item, 0);
        self.filters
            .iter()
            .enumerate()
            .map(|(i, f)| digest_bit_index(digest, i, f.len))
            .collect()
    }

    fn reset_one(&mut self) {
        let mut target = 0;
        for (i, f) in self.filters.iter().enumerate() {
            if f.ones > self.filters[target].ones {
                target = i;
            }
        }
        if let Some(bit) = self.filters[target].random_one(&mut self.rng) {
            self.filters[target].clear(bit);
            self.resets += 1;
            if let Some(log) = &mut self.reset_log {
                log.push((target, bit));
            }
        }
    }

    pub fn total_bits(&self) -> usize {
        self.filters.iter().map(|f| f.len).sum()
    }

    pub fn num_filters(&self) -> usize {
        self.filters.len()
    }

    /// Length of sub-filter `i`.
    pub fn bits_per_filter(&self, i: usize) -> usize {
        self.filters[i].len
    }

    pub fn fpr_threshold(&self) -> f64 {
        self.fpr_threshold
    }

    pub fn insertions(&self) -> u64 {
        self.insertions
    }

    pub fn resets(&self) -> u64 {
        self.resets
    }

    /// Set bits per sub-filter.
    pub fn loads(&self) -> Vec<usize> {
        self.filters.iter().map(|f| f.ones).collect()
    }

    pub fn reset_log(&self) -> Option<&[ResetRecord]> {
        self.reset_log.as_deref()
    }

    /// Whether bit `bit` of sub-filter `filter` is set.
    pub fn is_set(&self, filter: usize, bit: usize) -> bool {
        self.filters[filter].get(bit)
    }
}
