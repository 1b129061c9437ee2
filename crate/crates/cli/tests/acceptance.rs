//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use lodprobe::report::mask_timings;
use lodprobe_core::deref::{MockResolver, MockResponse, Resolver};
use lodprobe_core::graph::{estimate_cc_raw, mixing_time, random_walk, CompactGraph};
use lodprobe_core::metrics::{
    run, ClusteringConfig, ClusteringProcessor, ConcisenessConfig, ConcisenessProcessor,
    DerefConfig, DerefEstimate, DerefExact, ExtLinksEstimate, ExtLinksExact, MetricProcessor,
    MetricResult, Variant,
};
use lodprobe_core::ntriples::{sort_by_subject, Term, Triple};
use lodprobe_core::sketches::{ReservoirSampler, ResetPolicy, SeededRng, StableBloomFilter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tempfile::TempDir;

struct CountingAlloc;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for CountingAlloc {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            if new_size > layout.size() {
                let now = CURRENT.fetch_add(new_size - layout.size(), Ordering::Relaxed) + new_size
                    - layout.size();
                PEAK.fetch_max(now, Ordering::Relaxed);
            } else {
                CURRENT.fetch_sub(layout.size() - new_size, Ordering::Relaxed);
            }
        }
        p
    }
}

#[global_allocator]
static ALLOC: CountingAlloc = CountingAlloc;

/// Heap bytes in use now; also restarts peak tracking from here.
fn reset_peak() -> usize {
    let now = CURRENT.load(Ordering::Relaxed);
    PEAK.store(now, Ordering::Relaxed);
    now
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn check(checks: &[(bool, String)]) -> Outcome {
    let pass = checks.iter().all(|(ok, _)| *ok);
    let detail = checks
        .iter()
        .map(|(ok, msg)| {
            if *ok {
                msg.clone()
            } else {
                format!("FAILED {msg}")
            }
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome::new(pass, detail)
}

fn iri(s: impl Into<String>) -> Term {
    Term::iri(s)
}

fn triple(s: Term, p: Term, o: Term) -> Triple {
    Triple::new(s, p, o).expect("valid triple")
}

// 1. Reservoir uniformity.

fn reservoir_uniformity() -> Outcome {
    const CAPACITY: usize = 100;
    const STREAM: usize = 10_000;
    const SEEDS: u64 = 1_000;
    let start = Instant::now();
    let mut counts = vec![0u64; STREAM];
    for seed in 0..SEEDS {
        let mut r = ReservoirSampler::with_seed(CAPACITY, seed).unwrap();
        for i in 0..STREAM {
            r.add(i);
        }
        for &i in r.items() {
            counts[i] += 1;
        }
    }
    let elapsed = start.elapsed();

    let p = CAPACITY as f64 / STREAM as f64;
    let expected = p * SEEDS as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = ChiSquared::new((STREAM - 1) as f64).unwrap().sf(chi2);

    // Inclusion frequency per item (first, middle, last) and per decile of
    // stream positions, against 3 binomial standard errors.
    let se_item = (p * (1.0 - p) / SEEDS as f64).sqrt();
    let mut worst_item = 0.0f64;
    for i in [0, STREAM / 2, STREAM - 1] {
        let f = counts[i] as f64 / SEEDS as f64;
        worst_item = worst_item.max((f - p).abs() / se_item);
    }
    let decile = STREAM / 10;
    let trials = (SEEDS as usize * decile) as f64;
    let se_decile = (p * (1.0 - p) / trials).sqrt();
    let mut worst_decile = 0.0f64;
    for d in 0..10 {
        let hits: u64 = counts[d * decile..(d + 1) * decile].iter().sum();
        worst_decile = worst_decile.max((hits as f64 / trials - p).abs() / se_decile);
    }
    check(&[
        (
            p_value > 0.001,
            format!("chi-square p = {p_value:.4} over {SEEDS} seeds"),
        ),
        (
            worst_item <= 3.0,
            format!("first/middle/last items within {worst_item:.2} SE"),
        ),
        (
            worst_decile <= 3.0,
            format!("deciles within {worst_decile:.2} SE"),
        ),
        (
            elapsed < Duration::from_secs(10),
            format!("{:.2}s", elapsed.as_secs_f64()),
        ),
    ])
}

// 2. Stable Bloom filter false-positive bound.

fn random_strings(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    while seen.len() < n {
        let len = rng.random_range(8..32);
        let s: String = (0..len)
            .map(|_| rng.random_range(b'a'..=b'z') as char)
            .collect();
        seen.insert(s);
    }
    let mut v: Vec<String> = seen.into_iter().collect();
    v.sort_unstable();
    // Sorting fixes the order; shuffle it deterministically.
    for i in (1..v.len()).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
    v
}

fn bloom_false_positives() -> Outcome {
    let start = Instant::now();
    let items = random_strings(50_000, 17);
    let probes = random_strings(100_000, 18);
    let inserted: HashSet<&str> = items.iter().map(String::as_str).collect();

    // In-stream: every item is new, so each "seen before" answer is false.
    let mut f = StableBloomFilter::new(1_000_000, 0.01, 7).unwrap();
    let mut in_stream_fp = 0usize;
    for s in &items {
        if f.check_and_add(s.as_bytes()) {
            in_stream_fp += 1;
        }
    }
    let in_stream = in_stream_fp as f64 / items.len() as f64;
    let unseen: Vec<&String> = probes
        .iter()
        .filter(|p| !inserted.contains(p.as_str()))
        .collect();
    let probe_fp = unseen.iter().filter(|p| f.contains(p.as_bytes())).count();
    let probe_rate = probe_fp as f64 / unseen.len() as f64;

    let mut plain = StableBloomFilter::new(1_000_000, 0.01, 7)
        .unwrap()
        .with_reset_policy(ResetPolicy::Disabled);
    for s in &items {
        plain.check_and_add(s.as_bytes());
    }
    let false_negatives = items
        .iter()
        .filter(|s| !plain.contains(s.as_bytes()))
        .count();
    let elapsed = start.elapsed();
    check(&[
        (
            in_stream <= 0.02,
            format!("in-stream FPR {in_stream:.5} ({} filters)", f.num_filters()),
        ),
        (
            probe_rate <= 0.02,
            format!(
                "probe FPR {probe_rate:.5} on {} unseen strings",
                unseen.len()
            ),
        ),
        (
            false_negatives == 0,
            format!("{false_negatives} false negatives without resets"),
        ),
        (
            elapsed < Duration::from_secs(5),
            format!("{:.2}s", elapsed.as_secs_f64()),
        ),
    ])
}

// 3. Extensional conciseness.

/// Subject-ordered instances of 10 statements each. A chosen 15% of the
/// instances repeat the statements of an earlier distinct instance, picked
/// among the `window` most recent ones (or anywhere when `None`).
struct ConcisenessFixture {
    rng: SeededRng,
    instances: usize,
    is_duplicate: Vec<bool>,
    window: Option<usize>,
    originals: Vec<usize>,
    next: usize,
}

impl ConcisenessFixture {
    const STATEMENTS: usize = 10;

    fn new(instances: usize, window: Option<usize>, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let mut is_duplicate = vec![false; instances];
        let target = instances * 15 / 100;
        let mut marked = 0;
        while marked < target {
            let i = 1 + rng.index(instances - 1);
            if !is_duplicate[i] {
                is_duplicate[i] = true;
                marked += 1;
            }
        }
        ConcisenessFixture {
            rng,
            instances,
            is_duplicate,
            window,
            originals: Vec::new(),
            next: 0,
        }
    }

    fn exact_value(&self) -> f64 {
        let dups = self.is_duplicate.iter().filter(|d| **d).count();
        1.0 - dups as f64 / self.instances as f64
    }

    /// Feeds every triple to `sink`, in subject order.
    fn emit(mut self, mut sink: impl FnMut(&Triple)) {
        for i in 0..self.instances {
            let content = if self.is_duplicate[i] {
                let k = self.originals.len();
                match self.window {
                    Some(w) => self.originals[k - 1 - self.rng.index(w.min(k))],
                    None => self.originals[self.rng.index(k)],
                }
            } else {
                self.originals.push(self.next);
                self.next += 1;
                self.next - 1
            };
            let subject = iri(format!("http://data.example.org/item/{i:07}"));
            for j in 0..Self::STATEMENTS {
                let t = triple(
                    subject.clone(),
                    iri(format!("http://vocab.example.org/p{j}")),
                    Term::literal(format!("value-{content}-{j}")),
                );
                sink(&t);
            }
        }
    }
}

fn conciseness_estimate(seed: u64) -> Box<dyn MetricProcessor> {
    let cfg = ConcisenessConfig {
        total_bits: 100_000,
        fpr_threshold: 0.001,
        num_filters: Some(10),
        resets: true,
        seed,
    };
    Box::new(ConcisenessProcessor::new(Variant::Estimate, cfg).unwrap())
}

fn collect(fixture: ConcisenessFixture) -> Vec<Triple> {
    let mut v = Vec::new();
    fixture.emit(|t| v.push(t.clone()));
    v
}

fn extensional_conciseness() -> Outcome {
    let fixture = ConcisenessFixture::new(10_000, Some(50), 1);
    let truth = fixture.exact_value();
    let triples = collect(fixture);
    let exact = run(Box::new(ConcisenessProcessor::exact()), &triples).unwrap();
    let estimates: Vec<f64> = (0..5)
        .map(|seed| run(conciseness_estimate(seed), &triples).unwrap().value)
        .collect();
    let worst = estimates
        .iter()
        .map(|e| (e - truth).abs())
        .fold(0.0, f64::max);

    let uniform = collect(ConcisenessFixture::new(10_000, None, 1));
    let uniform_estimate = run(conciseness_estimate(0), &uniform).unwrap().value;
    drop(uniform);

    // Runtime at 1M triples: processor time of one pass, best of five
    // interleaved passes per variant.
    let big = collect(ConcisenessFixture::new(100_000, Some(50), 2));
    let time_pass = |mut p: Box<dyn MetricProcessor>| {
        let start = Instant::now();
        for (i, t) in big.iter().enumerate() {
            p.process(t, i as u64 + 1).unwrap();
        }
        let value = p.finalize().unwrap().value;
        (start.elapsed().as_secs_f64(), value)
    };
    let (mut exact_secs, mut est_secs) = (f64::INFINITY, f64::INFINITY);
    let (mut exact_big, mut est_big) = (0.0, 0.0);
    for _ in 0..5 {
        let (secs, value) = time_pass(Box::new(ConcisenessProcessor::exact()));
        (exact_secs, exact_big) = (exact_secs.min(secs), value);
        let (secs, value) = time_pass(conciseness_estimate(0));
        (est_secs, est_big) = (est_secs.min(secs), value);
    }
    drop(big);
    let ratio = est_secs / exact_secs;

    println!(
        "    diagnostic: duplicates placed uniformly at random over the stream give estimate {uniform_estimate:.4} \
         (exact {truth:.2}); the filter forgets instances seen long ago"
    );
    check(&[
        ((exact.value - truth).abs() < 1e-12 && (truth - 0.85).abs() < 1e-12, format!("exact {:.4}", exact.value)),
        (
            worst <= 0.02,
            format!(
                "estimates {} within {worst:.4}",
                estimates.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>().join("/")
            ),
        ),
        (
            ratio <= 0.5,
            format!(
                "1M triples: estimate {est_secs:.2}s vs exact {exact_secs:.2}s (ratio {ratio:.2}), |delta| {:.4}",
                (est_big - exact_big).abs()
            ),
        ),
    ])
}

// 4. Clustering coefficient.

fn gnp_edges(n: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Mean local clustering coefficient from an adjacency matrix; vertices of
/// degree below 2 contribute 0.
fn average_local_cc(n: usize, edges: &[(usize, usize)]) -> f64 {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    let mut total = 0.0;
    for v in 0..n {
        let nbrs: Vec<usize> = (0..n).filter(|&u| adj[v][u]).collect();
        let d = nbrs.len();
        if d < 2 {
            continue;
        }
        let mut links = 0;
        for i in 0..d {
            for j in i + 1..d {
                if adj[nbrs[i]][nbrs[j]] {
                    links += 1;
                }
            }
        }
        total += links as f64 / (d * (d - 1) / 2) as f64;
    }
    total / n as f64
}

fn edge_triples(edges: &[(usize, usize)]) -> Vec<Triple> {
    edges
        .iter()
        .map(|&(a, b)| {
            triple(
                iri(format!("http://g.example.org/v{a}")),
                iri("http://g.example.org/linksTo"),
                iri(format!("http://g.example.org/v{b}")),
            )
        })
        .collect()
}

fn cc_of(variant: Variant, seed: u64, triples: &[Triple]) -> f64 {
    let cfg = ClusteringConfig {
        mixing_multiplier: 1.0,
        min_steps: 3,
        seed,
    };
    let r = run(
        Box::new(ClusteringProcessor::new(variant, cfg).unwrap()),
        triples,
    )
    .unwrap();
    r.details["clusteringCoefficient"].as_f64().unwrap()
}

fn clustering_coefficient() -> Outcome {
    let edges = gnp_edges(500, 0.05, 2024);
    let truth = average_local_cc(500, &edges);
    let triples = edge_triples(&edges);
    let exact = cc_of(Variant::Exact, 0, &triples);
    let mut errors: Vec<f64> = (0..20)
        .map(|s| (cc_of(Variant::Estimate, s, &triples) - truth).abs())
        .collect();
    errors.sort_by(f64::total_cmp);
    let median = (errors[9] + errors[10]) / 2.0;

    let path: Vec<(usize, usize)> = (0..99).map(|i| (i, i + 1)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tree: Vec<(usize, usize)> = (1..200).map(|i| (rng.random_range(0..i), i)).collect();
    let mut triangle_free_max = 0.0f64;
    for g in [edge_triples(&path), edge_triples(&tree)] {
        triangle_free_max = triangle_free_max.max(cc_of(Variant::Exact, 0, &g));
        for s in 0..20 {
            triangle_free_max = triangle_free_max.max(cc_of(Variant::Estimate, s, &g));
        }
    }

    let k3 = CompactGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]);
    let steps = mixing_time(3, 1.0, 3);
    let runs = 10_000;
    let mean = (0..runs)
        .map(|s| estimate_cc_raw(&random_walk(&k3, steps, s).unwrap()).unwrap())
        .sum::<f64>()
        / runs as f64;
    check(&[
        (
            (exact - truth).abs() < 1e-12,
            format!("G(500,0.05) exact {exact:.5}"),
        ),
        (
            median <= 0.1,
            format!("median |error| over 20 walks {median:.4}"),
        ),
        (
            triangle_free_max == 0.0,
            format!("path/tree max {triangle_free_max}"),
        ),
        (
            (mean - 1.0).abs() <= 0.02,
            format!("K3 mean over {runs} walks {mean:.4}"),
        ),
    ])
}

// 5. Dereferenceability against a scripted mock.

const DEREF_PLDS: usize = 20;
const DEREF_URIS: usize = 50;
const DEAD_PLDS: usize = 2;

/// URI `j` of a live PLD follows pattern `j % 10`:
/// 0, 1: 303 to an RDF document (dereferenceable);
/// 2: hash URI whose document is RDF (dereferenceable);
/// 3: hash URI whose document is HTML; 4: direct 200 RDF on a slash URI;
/// 5: 303 to HTML; 6: 404; 7: 500; 8: transport failure; 9: 302 to RDF.
/// Every URI of a dead PLD, and its root, answers 500. URIs live on the
/// `www` host; the root probe goes to the bare domain.
fn deref_fixture(all_fail: bool) -> (MockResolver, Vec<Triple>) {
    let mut mock = MockResolver::new();
    let mut triples = Vec::new();
    for d in 0..DEREF_PLDS {
        let host = format!("http://www.site{d:02}.org");
        let dead = all_fail || d >= DEREF_PLDS - DEAD_PLDS;
        mock.route(
            &format!("http://site{d:02}.org/"),
            vec![if dead {
                MockResponse::status(500)
            } else {
                MockResponse::ok("text/html")
            }],
        );
        for j in 0..DEREF_URIS {
            let (uri, script) = if dead {
                (format!("{host}/r{j}"), vec![MockResponse::status(500)])
            } else {
                let slash = format!("{host}/r{j}");
                let doc = format!("{host}/doc{j}");
                let target = format!("{host}/data/r{j}");
                match j % 10 {
                    0 => (
                        slash,
                        vec![
                            MockResponse::redirect(303, &target),
                            MockResponse::ok("text/turtle"),
                        ],
                    ),
                    1 => (
                        slash,
                        vec![
                            MockResponse::redirect(303, &target),
                            MockResponse::ok("application/rdf+xml"),
                        ],
                    ),
                    2 => (
                        format!("{doc}#it"),
                        vec![MockResponse::ok("application/n-triples")],
                    ),
                    3 => (format!("{doc}#it"), vec![MockResponse::ok("text/html")]),
                    4 => (slash, vec![MockResponse::ok("text/turtle")]),
                    5 => (
                        slash,
                        vec![
                            MockResponse::redirect(303, &target),
                            MockResponse::ok("text/html"),
                        ],
                    ),
                    6 => (slash, vec![MockResponse::status(404)]),
                    7 => (slash, vec![MockResponse::status(500)]),
                    8 => (slash, vec![MockResponse::error("connection reset")]),
                    _ => (
                        slash,
                        vec![
                            MockResponse::redirect(302, &target),
                            MockResponse::ok("text/turtle"),
                        ],
                    ),
                }
            };
            let route = uri.split('#').next().unwrap().to_owned();
            mock.route(&route, script);
            triples.push(triple(
                Term::blank(format!("b{d}x{j}")),
                iri("http://vocab.example.org/seeAlso"),
                iri(uri),
            ));
        }
    }
    (mock, triples)
}

fn deref_run(
    resolver: Arc<dyn Resolver>,
    triples: &[Triple],
    variant: Variant,
    seed: u64,
) -> MetricResult {
    let cfg = DerefConfig {
        global_capacity: 50,
        pld_capacity: 10_000,
        workers: 4,
        seed,
    };
    let p: Box<dyn MetricProcessor> = match variant {
        Variant::Exact => Box::new(DerefExact::new(resolver, cfg)),
        Variant::Estimate => Box::new(DerefEstimate::new(resolver, cfg).unwrap()),
    };
    run(p, triples).unwrap()
}

fn dereferenceability() -> Outcome {
    // Three dereferenceable patterns of ten on each of the 18 live PLDs.
    let hand = (3 * (DEREF_URIS / 10) * (DEREF_PLDS - DEAD_PLDS)) as f64
        / (DEREF_PLDS * DEREF_URIS) as f64;
    let (mock, triples) = deref_fixture(false);
    let resolver: Arc<dyn Resolver> = Arc::new(mock);
    let exact = deref_run(Arc::clone(&resolver), &triples, Variant::Exact, 0);
    let estimates: Vec<f64> = (0..20)
        .map(|s| deref_run(Arc::clone(&resolver), &triples, Variant::Estimate, s).value)
        .collect();
    let worst = estimates
        .iter()
        .map(|e| (e - exact.value).abs())
        .fold(0.0, f64::max);

    let (dead_mock, dead_triples) = deref_fixture(true);
    let dead: Arc<dyn Resolver> = Arc::new(dead_mock);
    let dead_exact = deref_run(Arc::clone(&dead), &dead_triples, Variant::Exact, 0).value;
    let dead_est = deref_run(dead, &dead_triples, Variant::Estimate, 0).value;
    check(&[
        (
            exact.value == hand,
            format!("exact {} vs hand-computed {hand}", exact.value),
        ),
        (
            worst <= 0.1,
            format!("20 estimates within {worst:.4} of exact"),
        ),
        (
            dead_exact == 0.0 && dead_est == 0.0,
            format!("all-5xx exact {dead_exact}, estimate {dead_est}"),
        ),
    ])
}

// 6. External links under full retention.

fn ext_links_dataset(seed: u64) -> (Vec<Triple>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plds = rng.random_range(5..300);
    let mut triples = Vec::new();
    if rng.random_bool(0.5) {
        triples.push(triple(
            iri("http://home.example.org/void"),
            iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type"),
            iri("http://rdfs.org/ns/void#Dataset"),
        ));
    }
    for i in 0..rng.random_range(100..5_000) {
        let object = match rng.random_range(0..10) {
            0 => Term::literal(format!("text {i}")),
            1 => Term::blank(format!("n{i}")),
            2 => iri(format!("http://home.example.org/r{i}")),
            _ => iri(format!(
                "http://www{}.provider{}.org/res/{i}",
                rng.random_range(0..3),
                rng.random_range(0..plds)
            )),
        };
        triples.push(triple(
            iri(format!("http://home.example.org/s{}", i % 97)),
            iri("http://vocab.example.org/link"),
            object,
        ));
    }
    let distinct: HashSet<String> = triples
        .iter()
        .filter_map(|t| lodprobe_core::metrics::term_pld(&t.object).ok())
        .collect();
    (triples, distinct.len())
}

fn ext_links_full_retention() -> Outcome {
    let mut mismatches = Vec::new();
    let cases = 50;
    for seed in 0..cases {
        let (triples, distinct) = ext_links_dataset(seed);
        let exact = run(Box::new(ExtLinksExact::new()), &triples).unwrap();
        for capacity in [distinct, distinct + 1, 2 * distinct] {
            let est = run(
                Box::new(ExtLinksEstimate::new(capacity, seed).unwrap()),
                &triples,
            )
            .unwrap();
            if est.value.to_bits() != exact.value.to_bits() {
                mismatches.push(format!(
                    "seed {seed} capacity {capacity}: {} vs {}",
                    est.value, exact.value
                ));
            }
        }
    }
    check(&[(
        mismatches.is_empty(),
        format!(
            "{} datasets x 3 capacities bit-equal {}",
            cases,
            mismatches.join(", ")
        ),
    )])
}

// 7. Determinism of `compare`.

fn compare_determinism(dir: &Path) -> Outcome {
    let (mock, deref_triples) = deref_fixture(false);
    drop(mock);
    let script = dir.join("mock.jsonl");
    {
        let mut w = BufWriter::new(fs::File::create(&script).unwrap());
        for d in 0..DEREF_PLDS {
            writeln!(
                w,
                r#"{{"pattern": "http://www.site{d:02}.org/*", "responses": [{{"status": 303, "location": "http://www.site{d:02}.org/data"}}, {{"status": 200, "content_type": "text/turtle"}}]}}"#
            )
            .unwrap();
            writeln!(
                w,
                r#"{{"pattern": "http://site{d:02}.org/", "responses": [{{"status": 200, "content_type": "text/html"}}]}}"#
            )
            .unwrap();
        }
    }
    let input = dir.join("mixed.nt");
    {
        let mut w = BufWriter::new(fs::File::create(&input).unwrap());
        let mut lines: Vec<String> = deref_triples.iter().map(Triple::to_ntriples).collect();
        ConcisenessFixture::new(2_000, Some(50), 3).emit(|t| lines.push(t.to_ntriples()));
        for t in edge_triples(&gnp_edges(120, 0.08, 9)) {
            lines.push(t.to_ntriples());
        }
        lines.sort();
        for l in lines {
            writeln!(w, "{l}").unwrap();
        }
    }
    let resolver = format!("mock:{}", script.display());
    let mut reports = Vec::new();
    let out = dir.join("report.json");
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_lodprobe"))
            .args(["compare", "--input"])
            .arg(&input)
            .args([
                "--metric",
                "deref",
                "--metric",
                "ext-links",
                "--metric",
                "extcon",
                "--metric",
                "cc",
            ])
            .args(["--param", "cc.m=0.5,1.0", "--param", "capacity=10,1000"])
            .args(["--resolver", &resolver, "--seed", "20240615", "--out"])
            .arg(&out)
            .env_remove("LODPROBE_SEED")
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome::new(
                false,
                format!(
                    "compare failed: {}",
                    String::from_utf8_lossy(&status.stderr)
                ),
            );
        }
        let mut v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        mask_timings(&mut v);
        reports.push(serde_json::to_vec_pretty(&v).unwrap());
    }
    let rows = serde_json::from_slice::<Value>(&reports[0]).unwrap()["deviations"]
        .as_array()
        .map_or(0, Vec::len);
    let first_difference = String::from_utf8_lossy(&reports[0])
        .lines()
        .zip(String::from_utf8_lossy(&reports[1]).lines())
        .position(|(a, b)| a != b)
        .map_or(String::new(), |i| {
            format!(", first difference at line {}", i + 1)
        });
    check(&[(
        reports[0] == reports[1],
        format!(
            "two runs, {} masked bytes, {rows} deviation rows{first_difference}",
            reports[0].len()
        ),
    )])
}

// 8. External sort.

fn external_sort(dir: &Path) -> Outcome {
    const LINES: usize = 1_000_000;
    const BUDGET: usize = 64 << 20;
    let input = dir.join("big.nt");
    let output = dir.join("big.sorted.nt");
    {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut w = BufWriter::new(fs::File::create(&input).unwrap());
        for i in 0..LINES {
            let s = rng.random_range(0..150_000u32);
            writeln!(
                w,
                "<http://sort.example.org/entity/{s}> <http://vocab.example.org/p{}> \"value {i}\" .",
                i % 13
            )
            .unwrap();
        }
    }

    let baseline = reset_peak();
    let start = Instant::now();
    let summary = sort_by_subject(&input, &output, BUDGET);
    let elapsed = start.elapsed();
    let peak = PEAK.load(Ordering::Relaxed).saturating_sub(baseline);
    let summary = match summary {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, format!("sort failed: {e}")),
    };

    // Single pass: a subject may not reappear once another one started.
    let mut closed: HashSet<String> = HashSet::new();
    let mut current = String::new();
    let mut contiguous = true;
    let mut out_lines = 0usize;
    for line in BufReader::new(fs::File::open(&output).unwrap()).lines() {
        let line = line.unwrap();
        out_lines += 1;
        let subject = line.split(' ').next().unwrap();
        if subject != current {
            if closed.contains(subject) {
                contiguous = false;
            }
            closed.insert(std::mem::replace(&mut current, subject.to_owned()));
        }
    }
    drop(closed);

    let text = fs::read_to_string(&input).unwrap();
    let mut oracle: Vec<&str> = text.lines().collect();
    oracle.sort_by(|a, b| (a.split(' ').next(), *a).cmp(&(b.split(' ').next(), *b)));
    let sorted = fs::read_to_string(&output).unwrap();
    let got: Vec<&str> = sorted.lines().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let sample_ok = got.len() == oracle.len()
        && (0..10_000).all(|_| {
            let i = rng.random_range(0..oracle.len());
            got[i] == oracle[i]
        });
    let limit = BUDGET as f64 * 1.2;
    check(&[
        (
            sample_ok,
            format!("{} lines, 10k-line sample matches oracle", got.len()),
        ),
        (
            contiguous && out_lines == LINES,
            "subjects contiguous".to_owned(),
        ),
        (
            (peak as f64) <= limit,
            format!(
                "peak heap {:.1} MiB of {} MiB budget ({} runs, {:.1}s)",
                peak as f64 / (1 << 20) as f64,
                BUDGET >> 20,
                summary.runs,
                elapsed.as_secs_f64()
            ),
        ),
    ])
}

fn main() {
    let dir = TempDir::new().expect("temporary directory");
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("reservoir uniformity", Box::new(reservoir_uniformity)),
        (
            "stable Bloom filter false positives",
            Box::new(bloom_false_positives),
        ),
        (
            "extensional conciseness estimate",
            Box::new(extensional_conciseness),
        ),
        (
            "clustering coefficient estimator",
            Box::new(clustering_coefficient),
        ),
        (
            "dereferenceability against mock",
            Box::new(dereferenceability),
        ),
        (
            "external links under full retention",
            Box::new(ext_links_full_retention),
        ),
        (
            "compare determinism",
            Box::new(|| compare_determinism(dir.path())),
        ),
        (
            "external sort under 64 MiB",
            Box::new(|| external_sort(dir.path())),
        ),
    ];
    let mut failed = 0;
    let mut tally: HashMap<bool, usize> = HashMap::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        *tally.entry(outcome.pass).or_default() += 1;
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name} ({:.1}s): {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!(
        "acceptance: {} passed, {} failed",
        tally.get(&true).copied().unwrap_or(0),
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
