//! The JSON report and its schema.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use lodprobe_core::metrics::MetricResult;
use lodprobe_core::ntriples::{ParseError, SortSummary};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// JSON Schema (draft 2020-12) every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

/// Keys whose values depend on wall-clock time.
pub const TIMING_KEYS: &[&str] = &["elapsedSeconds", "speedup"];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetSummary {
    pub input: String,
    pub lines_read: u64,
    pub triples: u64,
    pub parse_errors: u64,
    pub bytes_read: u64,
    /// The first few parse errors, in file order.
    pub error_samples: Vec<ParseError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presort: Option<SortSummary>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Deviation {
    pub metric: String,
    pub parameters: serde_json::Map<String, Value>,
    pub exact_value: f64,
    pub estimate_value: f64,
    pub abs_delta: f64,
    /// Exact runtime over estimate runtime.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub tool_version: String,
    pub command: String,
    pub config_echo: RunConfig,
    pub dataset_summary: DatasetSummary,
    pub results: Vec<MetricResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviations: Option<Vec<Deviation>>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes the report next to `path` and renames it into place, so a
    /// failed run never leaves a partial file.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .with_context(|| format!("creating a file in {}", dir.display()))?;
        tmp.write_all(self.to_json().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Plain-text summary, one line per result.
    pub fn human_summary(&self) -> String {
        let d = &self.dataset_summary;
        let mut out = format!(
            "{}: {} triples, {} parse errors, {} lines\n",
            d.input, d.triples, d.parse_errors, d.lines_read
        );
        for r in &self.results {
            let params: Vec<String> = r
                .parameters
                .iter()
                .map(|(k, v)| format!("{k}={}", plain(v)))
                .collect();
            out.push_str(&format!(
                "  {:<24} {:<8} {:>10.6}  {:>8.3}s  {}\n",
                r.metric_name,
                if r.estimated { "estimate" } else { "exact" },
                r.value,
                r.elapsed_seconds,
                params.join(" ")
            ));
        }
        for dev in self.deviations.iter().flatten() {
            out.push_str(&format!(
                "  delta {:<18} |{:.6} - {:.6}| = {:.6}  speedup {}\n",
                dev.metric,
                dev.exact_value,
                dev.estimate_value,
                dev.abs_delta,
                dev.speedup.map_or("n/a".to_owned(), |s| format!("{s:.2}x"))
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        v => v.to_string(),
    }
}

/// Replaces every timing value with `null`, for comparing two runs.
pub fn mask_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, child) in map.iter_mut() {
                if TIMING_KEYS.contains(&k.as_str()) {
                    *child = Value::Null;
                } else {
                    mask_timings(child);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(mask_timings),
        _ => {}
    }
}
