//! Runs configured metrics over one pass of the input.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context, Result};
use lodprobe_core::deref::{HttpResolver, HttpResolverConfig, MockResolver, Resolver};
use lodprobe_core::metrics::{
    build_processor, MetricError, MetricKind, MetricResult, Timed, Variant,
};
use lodprobe_core::ntriples::{open_dataset, sort_by_subject, Record, SortSummary};

use crate::config::{MetricSpec, ResolverSpec, RunConfig};
use crate::report::{DatasetSummary, Deviation, Report};

const ERROR_SAMPLES: usize = 10;

/// Failure that aborts a run. Exit status 1.
#[derive(Debug)]
pub struct Fatal(pub anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.into())
    }
}

impl std::fmt::Display for Fatal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

/// The seed recorded in the config, or a fresh random one.
pub fn resolve_seed(cfg: &mut RunConfig) -> u64 {
    *cfg.seed.get_or_insert_with(rand::random)
}

fn make_resolver(cfg: &RunConfig) -> Result<Arc<dyn Resolver>> {
    Ok(match &cfg.resolver {
        ResolverSpec::Mock(path) => {
            let m = MockResolver::from_path(path)
                .with_context(|| format!("loading mock script {}", path.display()))?;
            Arc::new(m.with_max_redirects(cfg.max_redirects))
        }
        ResolverSpec::Live => Arc::new(HttpResolver::new(HttpResolverConfig {
            timeout: Duration::from_millis(cfg.http_timeout_ms),
            max_redirects: cfg.max_redirects,
            request_delay: Duration::from_millis(cfg.request_delay_ms),
            ..Default::default()
        })),
    })
}

struct Job {
    spec: MetricSpec,
    variant: Variant,
}

struct PassOutput {
    summary: DatasetSummary,
    results: Vec<MetricResult>,
    warnings: Vec<String>,
}

fn run_pass(cfg: &RunConfig, jobs: &[Job], seed: u64) -> Result<PassOutput, Fatal> {
    let input = cfg.input.clone().ok_or_else(|| anyhow!("no input file"))?;
    if !input.is_file() {
        return Err(anyhow!("input {} does not exist or is not a file", input.display()).into());
    }
    let resolver = if jobs
        .iter()
        .any(|j| j.spec.name == MetricKind::Dereferenceability)
    {
        Some(make_resolver(cfg)?)
    } else {
        None
    };
    let mut processors = Vec::with_capacity(jobs.len());
    for job in jobs {
        let p = build_processor(
            job.spec.name,
            job.variant,
            &job.spec.parameters,
            seed,
            resolver.clone(),
        )?;
        processors.push(Timed::new(p));
    }

    let start = Instant::now();
    let mut warnings = Vec::new();
    let mut sorted_copy: Option<tempfile::TempPath> = None;
    let mut presort: Option<SortSummary> = None;
    if cfg.presort && jobs.iter().any(|j| j.spec.name.needs_subject_order()) {
        let dir = std::env::temp_dir();
        let tmp = tempfile::Builder::new()
            .prefix("lodprobe-sorted-")
            .suffix(".nt")
            .tempfile_in(&dir)?
            .into_temp_path();
        let summary = sort_by_subject(&input, &tmp, cfg.memory_budget as usize)?;
        presort = Some(summary);
        sorted_copy = Some(tmp);
    }
    let read_from: PathBuf = sorted_copy
        .as_ref()
        .map_or(input.clone(), |p| p.to_path_buf());

    let mut reader =
        open_dataset(&read_from).with_context(|| format!("opening {}", read_from.display()))?;
    let mut samples = Vec::new();
    while let Some(record) = reader.next() {
        match record.map_err(|e| anyhow!("reading {}: {e}", input.display()))? {
            Record::Triple(t) => {
                let line = reader.summary().lines_read;
                for p in &mut processors {
                    p.process(&t, line)
                        .map_err(|e| with_line_hint(e, &read_from))?;
                }
            }
            Record::Error(e) => {
                if samples.len() < ERROR_SAMPLES {
                    samples.push(e);
                }
            }
        }
    }
    let parse = reader.summary();
    let mut results = Vec::with_capacity(processors.len());
    for p in processors {
        let mut r = p.finalize()?;
        r.seed = Some(seed);
        if r.counter_value("zeroDenominator") == Some(1) {
            warnings.push(format!(
                "{}: nothing to measure; reporting the empty-input value",
                r.metric_name
            ));
        }
        results.push(r);
    }
    if parse.parse_errors > 0 {
        warnings.push(format!(
            "{} malformed lines were skipped",
            parse.parse_errors
        ));
    }
    let summary = DatasetSummary {
        input: input.display().to_string(),
        lines_read: parse.lines_read,
        triples: parse.triples,
        parse_errors: parse.parse_errors,
        bytes_read: parse.bytes_read,
        error_samples: samples,
        presort,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(PassOutput {
        summary,
        results,
        warnings,
    })
}

fn with_line_hint(e: MetricError, path: &Path) -> Fatal {
    match e {
        MetricError::SortOrderViolation { subject, line } => Fatal(anyhow!(
            "{}:{line}: input is not grouped by subject ({subject} appeared earlier in a separate run); \
             run `lodprobe sort` first or pass --presort",
            path.display()
        )),
        e => Fatal(e.into()),
    }
}

fn report(
    command: &str,
    cfg: RunConfig,
    pass: PassOutput,
    deviations: Option<Vec<Deviation>>,
) -> Report {
    Report {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: command.to_owned(),
        config_echo: cfg,
        dataset_summary: pass.summary,
        results: pass.results,
        deviations,
        warnings: pass.warnings,
    }
}

fn expanded(cfg: &RunConfig) -> Vec<MetricSpec> {
    cfg.metrics.iter().flat_map(MetricSpec::expand).collect()
}

/// Runs every configured metric in its configured variant.
pub fn assess(mut cfg: RunConfig) -> Result<Report, Fatal> {
    cfg.validate()?;
    let seed = resolve_seed(&mut cfg);
    let jobs: Vec<Job> = expanded(&cfg)
        .into_iter()
        .map(|spec| Job {
            variant: spec.variant,
            spec,
        })
        .collect();
    let pass = run_pass(&cfg, &jobs, seed)?;
    Ok(report("assess", cfg, pass, None))
}

/// Runs every configured metric in both variants and reports the gap.
///
/// The exact variant runs once per metric; each parameter combination of
/// the estimate is compared against it.
pub fn compare(mut cfg: RunConfig) -> Result<Report, Fatal> {
    cfg.validate()?;
    let seed = resolve_seed(&mut cfg);
    for m in &mut cfg.metrics {
        m.variant = Variant::Estimate;
    }
    let estimates = expanded(&cfg);
    let mut jobs = Vec::new();
    let mut exact_index = Vec::new();
    for spec in &estimates {
        let idx = match jobs
            .iter()
            .position(|j: &Job| j.variant == Variant::Exact && j.spec.name == spec.name)
        {
            Some(i) => i,
            None => {
                jobs.push(Job {
                    spec: MetricSpec {
                        name: spec.name,
                        variant: Variant::Exact,
                        parameters: exact_parameters(spec),
                    },
                    variant: Variant::Exact,
                });
                jobs.len() - 1
            }
        };
        exact_index.push(idx);
    }
    let first_estimate = jobs.len();
    for spec in &estimates {
        jobs.push(Job {
            spec: spec.clone(),
            variant: Variant::Estimate,
        });
    }
    let pass = run_pass(&cfg, &jobs, seed)?;
    let deviations = estimates
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let exact = &pass.results[exact_index[i]];
            let estimate = &pass.results[first_estimate + i];
            Deviation {
                metric: spec.name.name().to_owned(),
                parameters: spec.parameters.clone().into_iter().collect(),
                exact_value: exact.value,
                estimate_value: estimate.value,
                abs_delta: (exact.value - estimate.value).abs(),
                speedup: (estimate.elapsed_seconds > 0.0)
                    .then(|| exact.elapsed_seconds / estimate.elapsed_seconds),
            }
        })
        .collect();
    Ok(report("compare", cfg, pass, Some(deviations)))
}

/// Parameters that also affect the exact variant.
fn exact_parameters(spec: &MetricSpec) -> lodprobe_core::metrics::Params {
    spec.parameters
        .iter()
        .filter(|(k, _)| spec.name == MetricKind::Dereferenceability && k.as_str() == "workers")
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}
