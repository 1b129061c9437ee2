//! Links to external data providers.
//!
//! Every object IRI with a PLD counts towards the denominator. The numerator
//! is the number of distinct object PLDs other than the dataset's base PLD:
//! all of them for the exact variant, those retained by a PLD reservoir for
//! the estimate.

use std::collections::HashSet;

use crate::ntriples::Triple;
use crate::sketches::{AddOutcome, ReservoirSampler};

use super::base_uri::BaseUriDetector;
use super::pld::term_pld;
use super::{MetricError, MetricKind, MetricProcessor, MetricResult, Variant};

pub const DEFAULT_CAPACITY: usize = 20_000;

#[derive(Debug, Default)]
struct Common {
    base: BaseUriDetector,
    object_uris: u64,
    objects_without_pld: u64,
}

impl Common {
    /// Returns the object's PLD, if it has one.
    fn observe(&mut self, t: &Triple) -> Option<String> {
        self.base.observe(t);
        match term_pld(&t.object) {
            Ok(p) => {
                self.object_uris += 1;
                Some(p)
            }
            Err(_) => {
                self.objects_without_pld += 1;
                None
            }
        }
    }

    fn result<'a>(
        &self,
        variant: Variant,
        seed: Option<u64>,
        plds: impl Iterator<Item = &'a String>,
    ) -> MetricResult {
        let base = self.base.base();
        let mut distinct = 0u64;
        let mut external = 0u64;
        for p in plds {
            distinct += 1;
            if base.as_deref() != Some(p.as_str()) {
                external += 1;
            }
        }
        let mut r = MetricResult::new(MetricKind::ExternalLinks, variant, seed)
            .counter("totalObjectUris", self.object_uris)
            .counter("objectsWithoutPld", self.objects_without_pld)
            .counter("distinctPlds", distinct)
            .counter("externalPlds", external)
            .counter("zeroDenominator", u64::from(self.object_uris == 0))
            .counter("baseDeclared", u64::from(self.base.declared().is_some()));
        if let Some(b) = base {
            r = r.detail("basePld", b);
        }
        r.value = super::ratio(external, self.object_uris);
        r
    }
}

#[derive(Debug, Default)]
pub struct ExtLinksExact {
    common: Common,
    plds: HashSet<String>,
}

impl ExtLinksExact {
    pub fn new() -> Self {
        Self::default()
    }
}

impl MetricProcessor for ExtLinksExact {
    fn kind(&self) -> MetricKind {
        MetricKind::ExternalLinks
    }

    fn variant(&self) -> Variant {
        Variant::Exact
    }

    fn process(&mut self, t: &Triple, _line: u64) -> Result<(), MetricError> {
        if let Some(p) = self.common.observe(t) {
            if !self.plds.contains(&p) {
                self.plds.insert(p);
            }
        }
        Ok(())
    }

    fn finalize(self: Box<Self>) -> Result<MetricResult, MetricError> {
        Ok(self.common.result(Variant::Exact, None, self.plds.iter()))
    }
}

/// PLD reservoir, deduplicated on insert: a PLD already held is counted but
/// not offered again.
#[derive(Debug)]
pub struct ExtLinksEstimate {
    common: Common,
    reservoir: ReservoirSampler<String>,
    held: HashSet<String>,
    seed: u64,
}

impl ExtLinksEstimate {
    pub fn new(capacity: usize, seed: u64) -> Result<Self, MetricError> {
        Ok(ExtLinksEstimate {
            common: Common::default(),
            reservoir: ReservoirSampler::with_seed(capacity, seed)?,
            held: HashSet::new(),
            seed,
        })
    }
}

impl MetricProcessor for ExtLinksEstimate {
    fn kind(&self) -> MetricKind {
        MetricKind::ExternalLinks
    }

    fn variant(&self) -> Variant {
        Variant::Estimate
    }

    fn process(&mut self, t: &Triple, _line: u64) -> Result<(), MetricError> {
        let Some(p) = self.common.observe(t) else {
            return Ok(());
        };
        if self.held.contains(&p) {
            return Ok(());
        }
        match self.reservoir.add(p.clone()) {
            AddOutcome::Added { .. } => {
                self.held.insert(p);
            }
            AddOutcome::Replaced { evicted, .. } => {
                self.held.remove(&evicted);
                self.held.insert(p);
            }
            AddOutcome::Discarded => {}
        }
        Ok(())
    }

    fn finalize(self: Box<Self>) -> Result<MetricResult, MetricError> {
        let mut sorted: Vec<&String> = self.reservoir.items().iter().collect();
        sorted.sort();
        Ok(self
            .common
            .result(Variant::Estimate, Some(self.seed), sorted.into_iter())
            .param("capacity", self.reservoir.capacity())
            .counter("pldsOffered", self.reservoir.seen()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::run;
    use crate::ntriples::Term;
    use proptest::prelude::*;

    fn t(s: &str, o: Term) -> Triple {
        Triple::new(Term::iri(s), Term::iri("http://p.org/p"), o).unwrap()
    }

    fn exact(ts: &[Triple]) -> MetricResult {
        run(Box::new(ExtLinksExact::new()), ts).unwrap()
    }

    fn estimate(ts: &[Triple], capacity: usize, seed: u64) -> MetricResult {
        run(Box::new(ExtLinksEstimate::new(capacity, seed).unwrap()), ts).unwrap()
    }

    #[test]
    fn literal_objects_only() {
        let ts: Vec<_> = (0..10)
            .map(|i| t("http://a.org/s", Term::literal(i.to_string())))
            .collect();
        for r in [exact(&ts), estimate(&ts, 5, 0)] {
            assert_eq!(r.value, 0.0);
            assert_eq!(r.counter_value("zeroDenominator"), Some(1));
            assert_eq!(r.counter_value("objectsWithoutPld"), Some(10));
        }
    }

    #[test]
    fn one_external_link_in_a_thousand() {
        let mut ts: Vec<_> = (0..999)
            .map(|i| {
                t(
                    &format!("http://a.org/s{i}"),
                    Term::iri(format!("http://a.org/o{i}")),
                )
            })
            .collect();
        ts.push(t("http://a.org/s", Term::iri("http://elsewhere.net/x")));
        for r in [exact(&ts), estimate(&ts, 2, 7)] {
            assert_eq!(r.value, 0.001);
            assert_eq!(r.details["basePld"], "a.org");
            assert_eq!(r.counter_value("totalObjectUris"), Some(1000));
        }
    }

    #[test]
    fn constructed_ratio() {
        // 40 object URIs: 20 internal, 20 spread over 5 external PLDs.
        let mut ts = Vec::new();
        for i in 0..20 {
            ts.push(t(
                &format!("http://base.org/s{i}"),
                Term::iri(format!("http://base.org/o{i}")),
            ));
            ts.push(t(
                &format!("http://base.org/s{i}"),
                Term::iri(format!("http://www.ext{}.com/r{i}", i % 5)),
            ));
            ts.push(t(
                &format!("http://base.org/s{i}"),
                Term::blank(format!("b{i}")),
            ));
        }
        assert_eq!(exact(&ts).value, 5.0 / 40.0);
    }

    #[test]
    fn small_reservoir_undercounts() {
        let ts: Vec<_> = (0..100)
            .map(|i| t("http://a.org/s", Term::iri(format!("http://e{i}.org/"))))
            .collect();
        let r = estimate(&ts, 10, 3);
        assert_eq!(r.counter_value("distinctPlds"), Some(10));
        assert_eq!(r.counter_value("pldsOffered"), Some(100));
        assert_eq!(r.value, 10.0 / 100.0);
        assert_eq!(exact(&ts).value, 100.0 / 100.0);
    }

    fn arb_dataset() -> impl Strategy<Value = Vec<Triple>> {
        proptest::collection::vec((0u8..6, 0u8..30, 0u8..4), 0..200).prop_map(|rows| {
            rows.into_iter()
                .map(|(s, o, kind)| {
                    let object = match kind {
                        0 => Term::literal(format!("v{o}")),
                        1 => Term::blank(format!("b{o}")),
                        _ => Term::iri(format!("http://h{}.pld{}.org/x", o % 3, o)),
                    };
                    t(&format!("http://s{s}.org/r"), object)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn full_retention_matches_exact(ts in arb_dataset(), seed: u64) {
            let e = exact(&ts);
            let distinct = e.counter_value("distinctPlds").unwrap() as usize;
            let a = estimate(&ts, distinct.max(1), seed);
            prop_assert_eq!(a.value.to_bits(), e.value.to_bits());
            prop_assert_eq!(a.counters.get("externalPlds"), e.counters.get("externalPlds"));
        }

        #[test]
        fn value_in_unit_interval(ts in arb_dataset(), cap in 1usize..10, seed: u64) {
            let v = estimate(&ts, cap, seed).value;
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn exact_is_order_invariant(ts in arb_dataset(), seed: u64) {
            let mut shuffled = ts.clone();
            let mut rng = crate::sketches::SeededRng::new(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.index(i + 1));
            }
            prop_assert_eq!(exact(&ts).value, exact(&shuffled).value);
        }
    }
}
