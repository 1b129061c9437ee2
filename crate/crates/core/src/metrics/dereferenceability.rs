//! Dereferenceability of subject and object IRIs.
//!
//! Predicates are not checked. The exact variant classifies every distinct
//! http(s) IRI. The estimate keeps a reservoir of PLDs and, for each PLD it
//! holds, a reservoir of that PLD's IRIs; a PLD leaving the global reservoir
//! takes its IRI reservoir with it. At the end the root of every held PLD is
//! probed first: a PLD whose root answers 4xx/5xx (or cannot be reached)
//! marks all of its sampled IRIs as not dereferenceable without further
//! requests.

use std::collections::{HashMap, HashSet};
use std::ops::AddAssign;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::deref::{
    classify, pld_alive, pld_root, CachedResolver, NotDereferenceable, Resolver, Verdict,
};
use crate::ntriples::{Term, Triple};
use crate::sketches::murmur3::murmur3_x64_128;
use crate::sketches::{AddOutcome, ReservoirSampler};

use super::pld::term_pld;
use super::{MetricError, MetricKind, MetricProcessor, MetricResult, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerefConfig {
    pub global_capacity: usize,
    pub pld_capacity: usize,
    /// Concurrent classification threads.
    pub workers: usize,
    pub seed: u64,
}

impl Default for DerefConfig {
    fn default() -> Self {
        DerefConfig {
            global_capacity: 50,
            pld_capacity: 10_000,
            workers: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    checked: u64,
    hash: u64,
    see_other: u64,
    not_dereferenceable: u64,
    transport: u64,
    malformed: u64,
}

impl Tally {
    fn record(&mut self, verdict: Result<Verdict, crate::deref::DerefError>) {
        self.checked += 1;
        match verdict {
            Ok(Verdict::DereferenceableHash) => self.hash += 1,
            Ok(Verdict::Dereferenceable303) => self.see_other += 1,
            Ok(Verdict::NotDereferenceable(reason)) => {
                self.not_dereferenceable += 1;
                if matches!(reason, NotDereferenceable::Transport(_)) {
                    self.transport += 1;
                }
            }
            Err(_) => {
                self.not_dereferenceable += 1;
                self.malformed += 1;
            }
        }
    }

    fn ok(&self) -> u64 {
        self.hash + self.see_other
    }
}

impl AddAssign for Tally {
    fn add_assign(&mut self, o: Tally) {
        self.checked += o.checked;
        self.hash += o.hash;
        self.see_other += o.see_other;
        self.not_dereferenceable += o.not_dereferenceable;
        self.transport += o.transport;
        self.malformed += o.malformed;
    }
}

fn classify_all(uris: &[&str], resolver: &dyn Resolver, workers: usize) -> Tally {
    let next = AtomicUsize::new(0);
    let worker = || {
        let mut t = Tally::default();
        loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            let Some(uri) = uris.get(i) else {
                return t;
            };
            t.record(classify(uri, resolver));
        }
    };
    let workers = workers.clamp(1, uris.len().max(1));
    if workers == 1 {
        return worker();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers).map(|_| s.spawn(worker)).collect();
        let mut total = Tally::default();
        for h in handles {
            total += h.join().expect("classification worker panicked");
        }
        total
    })
}

/// Counts shared by both variants.
#[derive(Debug, Default)]
struct Occurrences {
    iris: u64,
    without_pld: u64,
}

impl Occurrences {
    /// Subject and object terms of `t` that have a PLD.
    fn terms<'a>(&mut self, t: &'a Triple) -> impl Iterator<Item = (&'a str, String)> {
        let mut out = Vec::with_capacity(2);
        for term in [&t.subject, &t.object] {
            match (term, term_pld(term)) {
                (Term::Iri(iri), Ok(p)) => {
                    self.iris += 1;
                    out.push((iri.as_str(), p));
                }
                _ => self.without_pld += 1,
            }
        }
        out.into_iter()
    }
}

fn finish(
    mut r: MetricResult,
    tally: Tally,
    occ: &Occurrences,
    config: &DerefConfig,
) -> MetricResult {
    r = r
        .param("workers", config.workers)
        .counter("iriOccurrences", occ.iris)
        .counter("termsWithoutPld", occ.without_pld)
        .counter("urisChecked", tally.checked)
        .counter("derefOk", tally.ok())
        .counter("derefHash", tally.hash)
        .counter("deref303", tally.see_other)
        .counter("notDereferenceable", tally.not_dereferenceable)
        .counter("transportFailures", tally.transport)
        .counter("malformedUris", tally.malformed)
        .counter("zeroDenominator", u64::from(tally.checked == 0));
    r.value = super::ratio(tally.ok(), tally.checked);
    r
}

pub struct DerefExact {
    resolver: Arc<dyn Resolver>,
    config: DerefConfig,
    occurrences: Occurrences,
    uris: HashSet<String>,
}

impl DerefExact {
    pub fn new(resolver: Arc<dyn Resolver>, config: DerefConfig) -> Self {
        DerefExact {
            resolver,
            config,
            occurrences: Occurrences::default(),
            uris: HashSet::new(),
        }
    }
}

impl MetricProcessor for DerefExact {
    fn kind(&self) -> MetricKind {
        MetricKind::Dereferenceability
    }

    fn variant(&self) -> Variant {
        Variant::Exact
    }

    fn process(&mut self, t: &Triple, _line: u64) -> Result<(), MetricError> {
        for (iri, _) in self.occurrences.terms(t) {
            if !self.uris.contains(iri) {
                self.uris.insert(iri.to_owned());
            }
        }
        Ok(())
    }

    fn finalize(self: Box<Self>) -> Result<MetricResult, MetricError> {
        let mut uris: Vec<&str> = self.uris.iter().map(String::as_str).collect();
        uris.sort_unstable();
        let cached = CachedResolver::new(Arc::clone(&self.resolver));
        let tally = classify_all(&uris, &cached, self.config.workers);
        let r = MetricResult::new(MetricKind::Dereferenceability, Variant::Exact, None);
        Ok(finish(r, tally, &self.occurrences, &self.config))
    }
}

struct PldSample {
    reservoir: ReservoirSampler<String>,
    held: HashSet<String>,
}

pub struct DerefEstimate {
    resolver: Arc<dyn Resolver>,
    config: DerefConfig,
    occurrences: Occurrences,
    global: ReservoirSampler<String>,
    samples: HashMap<String, PldSample>,
    evicted_plds: u64,
}

impl DerefEstimate {
    pub fn new(resolver: Arc<dyn Resolver>, config: DerefConfig) -> Result<Self, MetricError> {
        // Fail early on a zero per-PLD capacity.
        ReservoirSampler::<()>::with_seed(config.pld_capacity, 0)?;
        Ok(DerefEstimate {
            resolver,
            config,
            occurrences: Occurrences::default(),
            global: ReservoirSampler::with_seed(config.global_capacity, config.seed)?,
            samples: HashMap::new(),
            evicted_plds: 0,
        })
    }

    fn new_sample(&self, pld: &str) -> PldSample {
        let (h1, _) = murmur3_x64_128(pld.as_bytes(), 0);
        PldSample {
            reservoir: ReservoirSampler::with_seed(self.config.pld_capacity, self.config.seed ^ h1)
                .expect("capacity checked at construction"),
            held: HashSet::new(),
        }
    }

    fn offer(&mut self, iri: &str, pld: String) {
        if !self.samples.contains_key(&pld) {
            match self.global.add(pld.clone()) {
                AddOutcome::Added { .. } => {}
                AddOutcome::Replaced { evicted, .. } => {
                    self.samples.remove(&evicted);
                    self.evicted_plds += 1;
                }
                AddOutcome::Discarded => return,
            }
            let sample = self.new_sample(&pld);
            self.samples.insert(pld.clone(), sample);
        }
        let sample = self.samples.get_mut(&pld).expect("held PLD has a sample");
        if sample.held.contains(iri) {
            return;
        }
        match sample.reservoir.add(iri.to_owned()) {
            AddOutcome::Added { .. } => {
                sample.held.insert(iri.to_owned());
            }
            AddOutcome::Replaced { evicted, .. } => {
                sample.held.remove(&evicted);
                sample.held.insert(iri.to_owned());
            }
            AddOutcome::Discarded => {}
        }
    }
}

impl MetricProcessor for DerefEstimate {
    fn kind(&self) -> MetricKind {
        MetricKind::Dereferenceability
    }

    fn variant(&self) -> Variant {
        Variant::Estimate
    }

    fn process(&mut self, t: &Triple, _line: u64) -> Result<(), MetricError> {
        let mut occ = std::mem::take(&mut self.occurrences);
        for (iri, pld) in occ.terms(t) {
            self.offer(iri, pld);
        }
        self.occurrences = occ;
        Ok(())
    }

    fn finalize(self: Box<Self>) -> Result<MetricResult, MetricError> {
        let cached = CachedResolver::new(Arc::clone(&self.resolver));
        let mut plds: Vec<&String> = self.samples.keys().collect();
        plds.sort_unstable();
        let mut tally = Tally::default();
        let mut dead = 0u64;
        let mut dead_uris = 0u64;
        let mut live_uris: Vec<&str> = Vec::new();
        for pld in plds {
            let sample = &self.samples[pld];
            if pld_alive(&pld_root(pld), &cached) {
                let mut uris: Vec<&str> = sample
                    .reservoir
                    .items()
                    .iter()
                    .map(String::as_str)
                    .collect();
                uris.sort_unstable();
                live_uris.extend(uris);
            } else {
                dead += 1;
                let n = sample.reservoir.len() as u64;
                dead_uris += n;
                tally.checked += n;
                tally.not_dereferenceable += n;
            }
        }
        tally += classify_all(&live_uris, &cached, self.config.workers);
        let sampled = self.samples.len() as u64;
        let r = MetricResult::new(
            MetricKind::Dereferenceability,
            Variant::Estimate,
            Some(self.config.seed),
        )
        .param("global_capacity", self.config.global_capacity)
        .param("pld_capacity", self.config.pld_capacity)
        .counter("pldsSampled", sampled)
        .counter("pldsOffered", self.global.seen())
        .counter("pldsEvicted", self.evicted_plds)
        .counter("deadPlds", dead)
        .counter("deadPldUris", dead_uris);
        Ok(finish(r, tally, &self.occurrences, &self.config))
    }
}
