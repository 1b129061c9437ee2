//! Extensional conciseness over subject-grouped input.
//!
//! An instance is the set of `predicate object` statements of one subject.
//! Two instances are duplicates when these sets are equal. The exact variant
//! keeps every signature (the sorted statements joined by newlines) in a hash
//! set. The estimate variant hashes each statement, sorts and deduplicates
//! the digests and offers a digest of that sequence to a stable Bloom filter.
//!
//! Both variants remember a digest of every closed subject so that a subject
//! reappearing after another one is reported instead of silently counted
//! twice.

use std::collections::{BTreeSet, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

use crate::ntriples::{Term, Triple};
use crate::sketches::murmur3::{murmur3_x64_128, Murmur3Hasher};
use crate::sketches::{ResetPolicy, StableBloomFilter};

use super::{MetricError, MetricKind, MetricProcessor, MetricResult, Variant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcisenessConfig {
    pub total_bits: usize,
    pub fpr_threshold: f64,
    /// Overrides the filter count derived from `fpr_threshold`.
    pub num_filters: Option<usize>,
    pub resets: bool,
    pub seed: u64,
}

impl Default for ConcisenessConfig {
    fn default() -> Self {
        ConcisenessConfig {
            total_bits: 100_000,
            fpr_threshold: 0.001,
            num_filters: None,
            resets: true,
            seed: 0,
        }
    }
}

/// Hasher for keys that already are Murmur3 digests: folds the bits
/// instead of hashing them again.
#[derive(Debug, Default)]
struct DigestHasher(u64);

impl Hasher for DigestHasher {
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            self.0 ^= u64::from_le_bytes(word);
        }
    }

    fn write_u128(&mut self, n: u128) {
        self.0 ^= (n as u64) ^ ((n >> 64) as u64);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

type DigestSet = HashSet<u128, BuildHasherDefault<DigestHasher>>;

#[derive(Debug)]
enum Signatures {
    Exact {
        statements: BTreeSet<String>,
        seen: HashSet<String>,
    },
    Estimate {
        buf: String,
        digests: Vec<u128>,
        filter: Box<StableBloomFilter>,
        config: ConcisenessConfig,
    },
}

#[derive(Debug)]
pub struct ConcisenessProcessor {
    /// The open subject and its digest.
    current: Option<(Term, u128)>,
    closed: DigestSet,
    key_buf: String,
    signatures: Signatures,
    total_instance: u64,
    duplicate_instance: u64,
    triples: u64,
}

fn digest(bytes: &[u8]) -> u128 {
    let (h1, h2) = murmur3_x64_128(bytes, 0);
    (u128::from(h1) << 64) | u128::from(h2)
}

impl ConcisenessProcessor {
    pub fn new(variant: Variant, config: ConcisenessConfig) -> Result<Self, MetricError> {
        let signatures = match variant {
            Variant::Exact => Signatures::Exact {
                statements: BTreeSet::new(),
                seen: HashSet::new(),
            },
            Variant::Estimate => {
                let filter = match config.num_filters {
                    Some(k) => StableBloomFilter::with_filters(
                        config.total_bits,
                        k,
                        config.fpr_threshold,
                        config.seed,
                    )?,
                    None => StableBloomFilter::new(
                        config.total_bits,
                        config.fpr_threshold,
                        config.seed,
                    )?,
                };
                let policy = if config.resets {
                    ResetPolicy::Probabilistic
                } else {
                    ResetPolicy::Disabled
                };
                Signatures::Estimate {
                    buf: String::new(),
                    digests: Vec::new(),
                    filter: Box::new(filter.with_reset_policy(policy)),
                    config,
                }
            }
        };
        Ok(ConcisenessProcessor {
            current: None,
            closed: DigestSet::default(),
            key_buf: String::new(),
            signatures,
            total_instance: 0,
            duplicate_instance: 0,
            triples: 0,
        })
    }

    pub fn exact() -> Self {
        Self::new(Variant::Exact, ConcisenessConfig::default())
            .expect("exact variant has no parameters")
    }

    fn subject_digest(&mut self, subject: &Term) -> u128 {
        self.key_buf.clear();
        subject.write_ntriples(&mut self.key_buf);
        digest(self.key_buf.as_bytes())
    }

    fn close_instance(&mut self) {
        if self.current.is_none() {
            return;
        }
        let duplicate = match &mut self.signatures {
            Signatures::Exact { statements, seen } => {
                let mut signature = String::new();
                for (i, s) in std::mem::take(statements).into_iter().enumerate() {
                    if i > 0 {
                        signature.push('\n');
                    }
                    signature.push_str(&s);
                }
                !seen.insert(signature)
            }
            Signatures::Estimate {
                digests, filter, ..
            } => {
                digests.sort_unstable();
                digests.dedup();
                let mut h = Murmur3Hasher::new(0);
                for d in digests.iter() {
                    h.write(&d.to_le_bytes());
                }
                digests.clear();
                filter.check_and_add_digest(h.finish128())
            }
        };
        self.total_instance += 1;
        if duplicate {
            self.duplicate_instance += 1;
        }
    }
}

impl MetricProcessor for ConcisenessProcessor {
    fn kind(&self) -> MetricKind {
        MetricKind::ExtensionalConciseness
    }

    fn variant(&self) -> Variant {
        match self.signatures {
            Signatures::Exact { .. } => Variant::Exact,
            Signatures::Estimate { .. } => Variant::Estimate,
        }
    }

    fn process(&mut self, t: &Triple, line: u64) -> Result<(), MetricError> {
        if self.current.as_ref().map(|(s, _)| s) != Some(&t.subject) {
            if let Some((_, prev)) = self.current {
                self.close_instance();
                self.closed.insert(prev);
            }
            let d = self.subject_digest(&t.subject);
            if self.closed.contains(&d) {
                return Err(MetricError::SortOrderViolation {
                    subject: t.subject.to_string(),
                    line,
                });
            }
            self.current = Some((t.subject.clone(), d));
        }
        self.triples += 1;
        match &mut self.signatures {
            Signatures::Exact { statements, .. } => {
                let mut s = String::new();
                t.predicate.write_ntriples(&mut s);
                s.push(' ');
                t.object.write_ntriples(&mut s);
                statements.insert(s);
            }
            Signatures::Estimate { buf, digests, .. } => {
                buf.clear();
                t.predicate.write_ntriples(buf);
                buf.push(' ');
                t.object.write_ntriples(buf);
                digests.push(digest(buf.as_bytes()));
            }
        }
        Ok(())
    }

    fn finalize(mut self: Box<Self>) -> Result<MetricResult, MetricError> {
        self.close_instance();
        let variant = self.variant();
        let seed = match &self.signatures {
            Signatures::Estimate { config, .. } => Some(config.seed),
            Signatures::Exact { .. } => None,
        };
        let mut r = MetricResult::new(MetricKind::ExtensionalConciseness, variant, seed)
            .counter("totalInstance", self.total_instance)
            .counter("duplicateInstance", self.duplicate_instance)
            .counter("triples", self.triples)
            .counter("zeroDenominator", u64::from(self.total_instance == 0));
        if let Signatures::Estimate { filter, config, .. } = &self.signatures {
            r = r
                .param("total_bits", config.total_bits)
                .param("fpr", config.fpr_threshold)
                .param("filters", filter.num_filters())
                .param(
                    "reset",
                    if config.resets {
                        "probabilistic"
                    } else {
                        "disabled"
                    },
                )
                .counter("filterInsertions", filter.insertions())
                .counter("filterResets", filter.resets());
        }
        r.value = if self.total_instance == 0 {
            1.0
        } else {
            (self.total_instance - self.duplicate_instance) as f64 / self.total_instance as f64
        };
        Ok(r)
    }
}
