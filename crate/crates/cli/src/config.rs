//! Run configuration: what to assess, with which parameters and seed.
//!
//! A configuration can come from a JSON file, from flags, or both; flags
//! win. Parameter values that are lists expand into one run per
//! combination, which is how parameter sweeps are expressed.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use lodprobe_core::metrics::{MetricKind, Params, Variant};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_MEMORY_BUDGET: u64 = 256 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ResolverSpec {
    Live,
    Mock(PathBuf),
}

impl FromStr for ResolverSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "live" {
            Ok(ResolverSpec::Live)
        } else if let Some(path) = s.strip_prefix("mock:") {
            if path.is_empty() {
                bail!("mock resolver needs a script path: mock:<path>");
            }
            Ok(ResolverSpec::Mock(PathBuf::from(path)))
        } else {
            bail!("resolver must be `live` or `mock:<path>`, got {s:?}")
        }
    }
}

impl TryFrom<String> for ResolverSpec {
    type Error = anyhow::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ResolverSpec> for String {
    fn from(r: ResolverSpec) -> String {
        r.to_string()
    }
}

impl fmt::Display for ResolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolverSpec::Live => f.write_str("live"),
            ResolverSpec::Mock(p) => write!(f, "mock:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetricSpec {
    pub name: MetricKind,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default)]
    pub parameters: Params,
}

fn default_variant() -> Variant {
    Variant::Estimate
}

impl MetricSpec {
    /// Parses `name` or `name:variant`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, variant) = match s.split_once(':') {
            Some((n, v)) => (n, v.parse::<Variant>()?),
            None => (s, Variant::Estimate),
        };
        Ok(MetricSpec {
            name: name.parse()?,
            variant,
            parameters: Params::new(),
        })
    }

    /// One spec per combination of list-valued parameters, in key order.
    pub fn expand(&self) -> Vec<MetricSpec> {
        let mut out = vec![Params::new()];
        for (key, value) in &self.parameters {
            let choices: Vec<Value> = match value {
                Value::Array(items) => items.clone(),
                v => vec![v.clone()],
            };
            out = out
                .into_iter()
                .flat_map(|base| {
                    choices.iter().map(move |c| {
                        let mut p = base.clone();
                        p.insert(key.clone(), c.clone());
                        p
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|parameters| MetricSpec {
                name: self.name,
                variant: self.variant,
                parameters,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_resolver")]
    pub resolver: ResolverSpec,
    #[serde(default = "default_memory")]
    pub memory_budget: u64,
    /// Sort the input by subject before assessing when a metric needs it.
    #[serde(default)]
    pub presort: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub http_timeout_ms: u64,
    #[serde(default)]
    pub request_delay_ms: u64,
    #[serde(default = "default_redirects")]
    pub max_redirects: usize,
}

fn default_resolver() -> ResolverSpec {
    ResolverSpec::Live
}

fn default_memory() -> u64 {
    DEFAULT_MEMORY_BUDGET
}

fn default_timeout() -> u64 {
    10_000
}

fn default_redirects() -> usize {
    lodprobe_core::deref::DEFAULT_MAX_REDIRECTS
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

impl RunConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Applies a `key=value` or `metric.key=value` override. A comma in the
    /// value makes it a list. Unscoped keys go to every configured metric
    /// that accepts them.
    pub fn apply_param(&mut self, assignment: &str) -> Result<()> {
        let (lhs, rhs) = assignment
            .split_once('=')
            .with_context(|| format!("parameter {assignment:?} is not of the form key=value"))?;
        let value = if rhs.contains(',') {
            Value::Array(
                rhs.split(',')
                    .map(|v| Value::String(v.trim().to_owned()))
                    .collect(),
            )
        } else {
            Value::String(rhs.trim().to_owned())
        };
        let (scope, key) = match lhs.split_once('.') {
            Some((m, k)) => (Some(m.parse::<MetricKind>()?), k.trim()),
            None => (None, lhs.trim()),
        };
        let mut applied = false;
        for spec in &mut self.metrics {
            let in_scope = scope.is_none_or(|m| m == spec.name);
            if in_scope && spec.name.parameter_keys().contains(&key) {
                spec.parameters.insert(key.to_owned(), value.clone());
                applied = true;
            }
        }
        if !applied {
            bail!("parameter {key:?} does not apply to any selected metric");
        }
        Ok(())
    }

    /// Checks metric parameter names before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            bail!("no metrics selected; use --metric <name>[:exact|:estimate]");
        }
        if self.input.is_none() {
            bail!("no input file; use --input <file.nt>");
        }
        for spec in &self.metrics {
            for key in spec.parameters.keys() {
                if !spec.name.parameter_keys().contains(&key.as_str()) {
                    bail!(
                        "{}: unknown parameter {key:?} (accepted: {})",
                        spec.name,
                        spec.name.parameter_keys().join(", ")
                    );
                }
            }
        }
        Ok(())
    }
}

/// Parses a byte count with an optional binary suffix (`K`, `M`, `G`).
pub fn parse_bytes(s: &str) -> Result<u64> {
    let t = s.trim();
    let upper = t.to_ascii_uppercase();
    let trimmed = upper.trim_end_matches("IB").trim_end_matches('B');
    let (digits, shift) = match trimmed.chars().last() {
        Some('K') => (&trimmed[..trimmed.len() - 1], 10),
        Some('M') => (&trimmed[..trimmed.len() - 1], 20),
        Some('G') => (&trimmed[..trimmed.len() - 1], 30),
        _ => (trimmed, 0),
    };
    let n: u64 = digits
        .trim()
        .replace('_', "")
        .parse()
        .with_context(|| format!("not a byte count: {s:?}"))?;
    n.checked_mul(1 << shift)
        .with_context(|| format!("byte count too large: {s:?}"))
}
