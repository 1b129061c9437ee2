//! The four quality metrics as streaming processors.
//!
//! A processor receives every triple once, in input order, then produces a
//! [`MetricResult`] on [`MetricProcessor::finalize`]. Each metric has an
//! exact variant and an estimate variant built on the sketches.
//!
//! | metric | value | estimate |
//! |---|---|---|
//! | dereferenceability | dereferenceable / checked URIs | two-level PLD/URI reservoirs |
//! | external-links | distinct external object PLDs / object URIs | PLD reservoir |
//! | extensional-conciseness | unique / total instances | stable Bloom filter |
//! | clustering-coefficient | 1 - average local coefficient | random walk |

mod base_uri;
mod clustering;
mod conciseness;
mod dereferenceability;
mod ext_links;
pub mod pld;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::deref::Resolver;
use crate::graph::GraphError;
use crate::ntriples::Triple;
use crate::sketches::SketchError;

pub use base_uri::{detect_base_uri, BaseUriDetector, OWL_ONTOLOGY, RDF_TYPE, VOID_DATASET};
pub use clustering::{ClusteringConfig, ClusteringProcessor};
pub use conciseness::{ConcisenessConfig, ConcisenessProcessor};
pub use dereferenceability::{DerefConfig, DerefEstimate, DerefExact};
pub use ext_links::{ExtLinksEstimate, ExtLinksExact};
pub use pld::{pld, term_pld, NoPld};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    #[serde(alias = "deref")]
    Dereferenceability,
    #[serde(alias = "ext-links")]
    ExternalLinks,
    #[serde(alias = "extcon")]
    ExtensionalConciseness,
    #[serde(alias = "cc")]
    ClusteringCoefficient,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Dereferenceability,
        MetricKind::ExternalLinks,
        MetricKind::ExtensionalConciseness,
        MetricKind::ClusteringCoefficient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Dereferenceability => "dereferenceability",
            MetricKind::ExternalLinks => "external-links",
            MetricKind::ExtensionalConciseness => "extensional-conciseness",
            MetricKind::ClusteringCoefficient => "clustering-coefficient",
        }
    }

    /// Parameter names accepted by [`build_processor`].
    pub fn parameter_keys(self) -> &'static [&'static str] {
        match self {
            MetricKind::Dereferenceability => &["global_capacity", "pld_capacity", "workers"],
            MetricKind::ExternalLinks => &["capacity"],
            MetricKind::ExtensionalConciseness => &["total_bits", "fpr", "filters", "reset"],
            MetricKind::ClusteringCoefficient => &["m", "min_steps"],
        }
    }

    /// Whether the metric needs its input grouped by subject.
    pub fn needs_subject_order(self) -> bool {
        self == MetricKind::ExtensionalConciseness
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "dereferenceability" | "deref" => MetricKind::Dereferenceability,
            "external-links" | "ext-links" => MetricKind::ExternalLinks,
            "extensional-conciseness" | "extcon" => MetricKind::ExtensionalConciseness,
            "clustering-coefficient" | "cc" => MetricKind::ClusteringCoefficient,
            _ => return Err(MetricError::UnknownMetric(s.to_owned())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Estimate,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Estimate => "estimate",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Variant::Exact),
            "estimate" | "approx" | "approximate" => Ok(Variant::Estimate),
            _ => Err(MetricError::UnknownVariant(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricResult {
    pub metric_name: String,
    pub value: f64,
    pub estimated: bool,
    pub parameters: BTreeMap<String, Value>,
    pub counters: BTreeMap<String, u64>,
    /// Derived facts that are neither inputs nor counts, such as the base PLD.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
    pub elapsed_seconds: f64,
    pub seed: Option<u64>,
}

impl MetricResult {
    fn new(kind: MetricKind, variant: Variant, seed: Option<u64>) -> Self {
        MetricResult {
            metric_name: kind.name().to_owned(),
            value: 0.0,
            estimated: variant == Variant::Estimate,
            parameters: BTreeMap::new(),
            counters: BTreeMap::new(),
            details: BTreeMap::new(),
            elapsed_seconds: 0.0,
            seed,
        }
    }

    fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_owned(), value.into());
        self
    }

    fn detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_owned(), value.into());
        self
    }

    fn counter(mut self, key: &str, value: u64) -> Self {
        self.counters.insert(key.to_owned(), value);
        self
    }

    pub fn counter_value(&self, key: &str) -> Option<u64> {
        self.counters.get(key).copied()
    }
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("unknown variant {0:?} (expected exact or estimate)")]
    UnknownVariant(String),
    #[error("{metric}: unknown parameter {key:?}")]
    UnknownParameter { metric: MetricKind, key: String },
    #[error("{metric}: parameter {key}: {message}")]
    InvalidParameter {
        metric: MetricKind,
        key: String,
        message: String,
    },
    #[error("{0} needs a resolver")]
    MissingResolver(MetricKind),
    #[error("input is not grouped by subject: {subject} reappears at line {line}")]
    SortOrderViolation { subject: String, line: u64 },
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A metric computed over a stream of triples.
pub trait MetricProcessor: Send {
    fn kind(&self) -> MetricKind;

    fn variant(&self) -> Variant;

    /// Feeds one triple; `line` is its 1-based line number in the input.
    fn process(&mut self, triple: &Triple, line: u64) -> Result<(), MetricError>;

    fn finalize(self: Box<Self>) -> Result<MetricResult, MetricError>;
}

/// Wraps a processor and accumulates the time spent inside it.
pub struct Timed {
    inner: Box<dyn MetricProcessor>,
    elapsed: Duration,
}

impl Timed {
    pub fn new(inner: Box<dyn MetricProcessor>) -> Self {
        Timed {
            inner,
            elapsed: Duration::ZERO,
        }
    }

    pub fn kind(&self) -> MetricKind {
        self.inner.kind()
    }

    pub fn variant(&self) -> Variant {
        self.inner.variant()
    }

    pub fn process(&mut self, triple: &Triple, line: u64) -> Result<(), MetricError> {
        let start = Instant::now();
        let r = self.inner.process(triple, line);
        self.elapsed += start.elapsed();
        r
    }

    pub fn finalize(self) -> Result<MetricResult, MetricError> {
        let start = Instant::now();
        let mut result = self.inner.finalize()?;
        result.elapsed_seconds = (self.elapsed + start.elapsed()).as_secs_f64();
        Ok(result)
    }
}

/// Runs one processor over an in-memory sequence of triples.
pub fn run<'a>(
    processor: Box<dyn MetricProcessor>,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> Result<MetricResult, MetricError> {
    let mut timed = Timed::new(processor);
    for (i, t) in triples.into_iter().enumerate() {
        timed.process(t, i as u64 + 1)?;
    }
    timed.finalize()
}

/// Free-form metric parameters, as given on the command line or in a config
/// file. Numbers may arrive as JSON numbers or strings.
pub type Params = BTreeMap<String, Value>;

struct ParamReader<'a> {
    metric: MetricKind,
    params: &'a Params,
    used: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn new(metric: MetricKind, params: &'a Params) -> Self {
        ParamReader {
            metric,
            params,
            used: Vec::new(),
        }
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> MetricError {
        MetricError::InvalidParameter {
            metric: self.metric,
            key: key.to_owned(),
            message: message.into(),
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.params.get(key)
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64, MetricError> {
        match self.raw(key) {
            None => Ok(default),
            Some(Value::Number(n)) => n.as_f64().ok_or_else(|| self.invalid(key, "not a number")),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|_| self.invalid(key, format!("not a number: {s:?}"))),
            Some(v) => Err(self.invalid(key, format!("not a number: {v}"))),
        }
    }

    fn usize(&mut self, key: &'static str, default: usize) -> Result<usize, MetricError> {
        self.opt_usize(key).map(|v| v.unwrap_or(default))
    }

    fn opt_usize(&mut self, key: &'static str) -> Result<Option<usize>, MetricError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(|v| Some(v as usize))
                .ok_or_else(|| self.invalid(key, "not a non-negative integer")),
            Some(Value::String(s)) => s
                .trim()
                .replace('_', "")
                .parse()
                .map(Some)
                .map_err(|_| self.invalid(key, format!("not a non-negative integer: {s:?}"))),
            Some(v) => Err(self.invalid(key, format!("not a non-negative integer: {v}"))),
        }
    }

    fn string(&mut self, key: &'static str, default: &str) -> Result<String, MetricError> {
        match self.raw(key) {
            None => Ok(default.to_owned()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(self.invalid(key, format!("not a string: {v}"))),
        }
    }

    fn finish(self) -> Result<(), MetricError> {
        match self
            .params
            .keys()
            .find(|k| !self.used.contains(&k.as_str()))
        {
            Some(k) => Err(MetricError::UnknownParameter {
                metric: self.metric,
                key: k.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Builds a processor from untyped parameters. `resolver` is required for
/// dereferenceability and ignored otherwise.
pub fn build_processor(
    kind: MetricKind,
    variant: Variant,
    params: &Params,
    seed: u64,
    resolver: Option<Arc<dyn Resolver>>,
) -> Result<Box<dyn MetricProcessor>, MetricError> {
    let mut p = ParamReader::new(kind, params);
    let processor: Box<dyn MetricProcessor> = match kind {
        MetricKind::ExternalLinks => {
            let capacity = p.usize("capacity", ext_links::DEFAULT_CAPACITY)?;
            p.finish()?;
            match variant {
                Variant::Exact => Box::new(ExtLinksExact::new()),
                Variant::Estimate => Box::new(ExtLinksEstimate::new(capacity, seed)?),
            }
        }
        MetricKind::ExtensionalConciseness => {
            let defaults = ConcisenessConfig::default();
            let config = ConcisenessConfig {
                total_bits: p.usize("total_bits", defaults.total_bits)?,
                fpr_threshold: p.f64("fpr", defaults.fpr_threshold)?,
                num_filters: p.opt_usize("filters")?,
                resets: match p.string("reset", "probabilistic")?.as_str() {
                    "probabilistic" => true,
                    "disabled" | "off" => false,
                    other => {
                        return Err(p.invalid(
                            "reset",
                            format!("expected probabilistic or disabled, got {other:?}"),
                        ))
                    }
                },
                seed,
            };
            p.finish()?;
            Box::new(ConcisenessProcessor::new(variant, config)?)
        }
        MetricKind::Dereferenceability => {
            let defaults = DerefConfig::default();
            let config = DerefConfig {
                global_capacity: p.usize("global_capacity", defaults.global_capacity)?,
                pld_capacity: p.usize("pld_capacity", defaults.pld_capacity)?,
                workers: p.usize("workers", defaults.workers)?,
                seed,
            };
            p.finish()?;
            if config.workers == 0 {
                return Err(p_invalid(kind, "workers", "must be at least 1"));
            }
            let resolver = resolver.ok_or(MetricError::MissingResolver(kind))?;
            match variant {
                Variant::Exact => Box::new(DerefExact::new(resolver, config)),
                Variant::Estimate => Box::new(DerefEstimate::new(resolver, config)?),
            }
        }
        MetricKind::ClusteringCoefficient => {
            let defaults = ClusteringConfig::default();
            let config = ClusteringConfig {
                mixing_multiplier: p.f64("m", defaults.mixing_multiplier)?,
                min_steps: p.usize("min_steps", defaults.min_steps)?,
                seed,
            };
            p.finish()?;
            Box::new(ClusteringProcessor::new(variant, config)?)
        }
    };
    Ok(processor)
}

fn p_invalid(metric: MetricKind, key: &str, message: &str) -> MetricError {
    MetricError::InvalidParameter {
        metric,
        key: key.to_owned(),
        message: message.to_owned(),
    }
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}
