//! Command-line front end: argument handling, run configuration, the
//! single-pass engine and the JSON report.

pub mod config;
pub mod engine;
pub mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lodprobe_core::ntriples::sort_by_subject;

use config::{parse_bytes, MetricSpec, ResolverSpec, RunConfig};
use engine::Fatal;
use report::{Report, REPORT_SCHEMA};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FATAL: u8 = 1;
pub const EXIT_PARSE_ERRORS: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lodprobe",
    version,
    about = "Exact and sketch-based quality metrics for N-Triples datasets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute metrics in the selected variants.
    Assess(RunArgs),
    /// Compute metrics in both variants and report the difference.
    Compare(RunArgs),
    /// Sort an N-Triples file so that each subject's statements are adjacent.
    Sort(SortArgs),
    /// Print the JSON Schema of the report.
    Schema,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// N-Triples input file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Metric as name[:exact|:estimate]; repeatable. Names: dereferenceability
    /// (deref), external-links (ext-links), extensional-conciseness (extcon),
    /// clustering-coefficient (cc).
    #[arg(long = "metric", value_name = "METRIC")]
    pub metrics: Vec<String>,
    /// Metric parameter as [metric.]key=value; comma-separated values sweep.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Seed for every sketch; random (and echoed in the report) if unset.
    #[arg(long, env = "LODPROBE_SEED")]
    pub seed: Option<u64>,
    /// `live` or `mock:<script.jsonl>`.
    #[arg(long)]
    pub resolver: Option<ResolverSpec>,
    /// Report path; the report goes to standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Memory budget for --presort, e.g. 64M.
    #[arg(long, value_parser = parse_bytes)]
    pub memory: Option<u64>,
    /// Sort the input by subject first when a metric needs grouped input.
    #[arg(long)]
    pub presort: bool,
    /// Per-request timeout of the live resolver, in milliseconds.
    #[arg(long)]
    pub http_timeout_ms: Option<u64>,
    /// Pause between live requests, in milliseconds.
    #[arg(long)]
    pub request_delay_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SortArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Memory budget, e.g. 64M.
    #[arg(long, value_parser = parse_bytes, default_value = "256M")]
    pub memory: u64,
}

impl RunArgs {
    /// Merges the optional config file with the flags.
    pub fn into_config(self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if self.input.is_some() {
            cfg.input = self.input;
        }
        if !self.metrics.is_empty() {
            cfg.metrics = self
                .metrics
                .iter()
                .map(|m| MetricSpec::parse(m))
                .collect::<anyhow::Result<_>>()?;
        }
        for p in &self.params {
            cfg.apply_param(p)?;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(r) = self.resolver {
            cfg.resolver = r;
        }
        if self.out.is_some() {
            cfg.output = self.out;
        }
        if let Some(m) = self.memory {
            cfg.memory_budget = m;
        }
        if self.presort {
            cfg.presort = true;
        }
        if let Some(t) = self.http_timeout_ms {
            cfg.http_timeout_ms = t;
        }
        if let Some(d) = self.request_delay_ms {
            cfg.request_delay_ms = d;
        }
        Ok(cfg)
    }
}

fn emit(report: &Report) -> Result<u8, Fatal> {
    match &report.config_echo.output {
        Some(path) => {
            report.write_atomic(path)?;
            print!("{}", report.human_summary());
        }
        None => {
            eprint!("{}", report.human_summary());
            std::io::stdout().write_all(report.to_json().as_bytes())?;
        }
    }
    Ok(if report.dataset_summary.parse_errors > 0 {
        EXIT_PARSE_ERRORS
    } else {
        EXIT_OK
    })
}

fn sort(args: SortArgs) -> Result<u8, Fatal> {
    let summary = sort_by_subject(&args.input, &args.output, args.memory as usize)?;
    println!(
        "sorted {} lines into {} ({} runs, {} merge passes, budget {} bytes)",
        summary.lines,
        args.output.display(),
        summary.runs,
        summary.merge_passes,
        summary.memory_budget
    );
    if summary.malformed_lines > 0 {
        eprintln!(
            "warning: {} malformed lines were passed through, ordered by their first field",
            summary.malformed_lines
        );
    }
    Ok(EXIT_OK)
}

/// Runs a parsed command and returns the process exit status.
pub fn execute(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Assess(args) => args
            .into_config()
            .map_err(Fatal)
            .and_then(engine::assess)
            .and_then(|r| emit(&r)),
        Command::Compare(args) => args
            .into_config()
            .map_err(Fatal)
            .and_then(engine::compare)
            .and_then(|r| emit(&r)),
        Command::Sort(args) => sort(args),
        Command::Schema => {
            print!("{REPORT_SCHEMA}");
            Ok(EXIT_OK)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FATAL
        }
    }
}

/// Entry point shared by the binary: parse arguments, run, map exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => ExitCode::from(execute(cli)),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let _ = e.print();
            ExitCode::from(code)
        }
    }
}
