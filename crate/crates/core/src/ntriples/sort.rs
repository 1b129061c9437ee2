//! External merge sort of N-Triples lines by subject.
//!
//! Lines are ordered by `(subject key, full line)` using byte order, where the
//! subject key is the canonical serialization of the parsed subject. Lines
//! that do not parse as statements (comments, blanks, malformed input) are
//! kept and keyed by their raw first field. Sorted runs are spilled to a
//! temporary directory next to the output and merged with a bounded fan-in.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::parse_line;

const IO_BUFFER: usize = 64 * 1024;
const MAX_FAN_IN: usize = 512;

/// Smallest accepted memory budget.
pub const MIN_MEMORY_BUDGET: usize = 256 * 1024;

#[derive(Debug, Error)]
pub enum SortError {
    #[error("memory budget of {budget} bytes is below the minimum of {minimum}")]
    BudgetTooSmall { budget: usize, minimum: usize },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

trait IoContext<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, SortError>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, SortError> {
        self.map_err(|source| SortError::Io {
            context: what(),
            source,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SortSummary {
    pub lines: u64,
    /// Lines that failed to parse; passed through keyed by their raw prefix.
    pub malformed_lines: u64,
    /// Blank and comment lines.
    pub non_statement_lines: u64,
    pub runs: u64,
    pub merge_passes: u64,
    pub memory_budget: u64,
}

/// Sort key of one line (without its terminator). The boolean is `false`
/// when the line is not a well-formed statement.
pub fn sort_key(line: &str) -> (String, Option<bool>) {
    match parse_line(line) {
        Ok(Some(t)) => {
            let mut key = String::new();
            t.subject.write_ntriples(&mut key);
            (key, Some(true))
        }
        Ok(None) => (raw_prefix(line).to_owned(), None),
        Err(_) => (raw_prefix(line).to_owned(), Some(false)),
    }
}

fn raw_prefix(line: &str) -> &str {
    line.split([' ', '\t']).next().unwrap_or("")
}

/// Sorts `input` into `output` using at most roughly `memory_budget` bytes
/// of heap. The output is written to a temporary file and renamed into place.
pub fn sort_by_subject(
    input: &Path,
    output: &Path,
    memory_budget: usize,
) -> Result<SortSummary, SortError> {
    if memory_budget < MIN_MEMORY_BUDGET {
        return Err(SortError::BudgetTooSmall {
            budget: memory_budget,
            minimum: MIN_MEMORY_BUDGET,
        });
    }
    let out_dir = match output.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let spill = tempfile::Builder::new()
        .prefix(".lodprobe-sort")
        .tempdir_in(&out_dir)
        .context(|| format!("creating spill directory in {}", out_dir.display()))?;

    let mut summary = SortSummary {
        memory_budget: memory_budget as u64,
        ..SortSummary::default()
    };
    let file = File::open(input).context(|| format!("opening {}", input.display()))?;
    let mut reader = BufReader::with_capacity(IO_BUFFER, file);

    let mut chunk = Chunk::new(memory_budget);
    let mut runs: Vec<PathBuf> = Vec::new();
    let mut raw = Vec::new();
    loop {
        raw.clear();
        let n = reader
            .read_until(b'\n', &mut raw)
            .context(|| format!("reading {}", input.display()))?;
        if n == 0 {
            break;
        }
        let line = String::from_utf8_lossy(trim_eol(&raw));
        summary.lines += 1;
        let (key, valid) = sort_key(&line);
        match valid {
            Some(false) => summary.malformed_lines += 1,
            None => summary.non_statement_lines += 1,
            Some(true) => {}
        }
        if !chunk.fits(&key, &line) {
            runs.push(chunk.spill(spill.path(), runs.len())?);
        }
        chunk.push(&key, &line);
    }

    let tmp_out = tempfile::Builder::new()
        .prefix(".lodprobe-sorted")
        .tempfile_in(&out_dir)
        .context(|| format!("creating temporary output in {}", out_dir.display()))?;
    if runs.is_empty() {
        summary.runs = u64::from(!chunk.is_empty());
        let mut w = BufWriter::with_capacity(IO_BUFFER, tmp_out.as_file());
        chunk
            .write_sorted(&mut w, false)
            .context(|| "writing output".into())?;
        w.flush().context(|| "writing output".into())?;
    } else {
        if !chunk.is_empty() {
            runs.push(chunk.spill(spill.path(), runs.len())?);
        }
        drop(chunk);
        summary.runs = runs.len() as u64;
        let fan_in = (memory_budget / 2 / IO_BUFFER).clamp(2, MAX_FAN_IN);
        let mut generation = 0usize;
        while runs.len() > fan_in {
            summary.merge_passes += 1;
            generation += 1;
            let mut next = Vec::new();
            for (i, group) in runs.chunks(fan_in).enumerate() {
                let path = spill.path().join(format!("merge-{generation}-{i}"));
                let f = File::create(&path).context(|| format!("creating {}", path.display()))?;
                merge(group, BufWriter::with_capacity(IO_BUFFER, f), true)?;
                for p in group {
                    let _ = std::fs::remove_file(p);
                }
                next.push(path);
            }
            runs = next;
        }
        summary.merge_passes += 1;
        merge(
            &runs,
            BufWriter::with_capacity(IO_BUFFER, tmp_out.as_file()),
            false,
        )?;
    }
    tmp_out
        .persist(output)
        .map_err(|e| e.error)
        .context(|| format!("renaming output to {}", output.display()))?;
    Ok(summary)
}

fn trim_eol(raw: &[u8]) -> &[u8] {
    let raw = raw.strip_suffix(b"\n").unwrap_or(raw);
    raw.strip_suffix(b"\r").unwrap_or(raw)
}

/// In-memory batch of `(key, line)` records stored back to back in one arena.
struct Chunk {
    arena: String,
    entries: Vec<Entry>,
    arena_limit: usize,
    entry_limit: usize,
}

#[derive(Clone, Copy)]
struct Entry {
    start: usize,
    key_len: u32,
    line_len: u32,
}

impl Chunk {
    fn new(budget: usize) -> Self {
        let arena_limit = budget / 2;
        let entry_limit = (budget / 10 / std::mem::size_of::<Entry>()).max(1);
        Chunk {
            arena: String::with_capacity(arena_limit),
            entries: Vec::with_capacity(entry_limit),
            arena_limit,
            entry_limit,
        }
    }

    fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn fits(&self, key: &str, line: &str) -> bool {
        self.entries.is_empty()
            || (self.entries.len() < self.entry_limit
                && self.arena.len() + key.len() + line.len() <= self.arena_limit)
    }

    fn push(&mut self, key: &str, line: &str) {
        let start = self.arena.len();
        self.arena.push_str(key);
        self.arena.push_str(line);
        self.entries.push(Entry {
            start,
            key_len: key.len() as u32,
            line_len: line.len() as u32,
        });
    }

    fn parts(&self, e: &Entry) -> (&str, &str) {
        let mid = e.start + e.key_len as usize;
        (
            &self.arena[e.start..mid],
            &self.arena[mid..mid + e.line_len as usize],
        )
    }

    fn write_sorted(&mut self, w: &mut impl Write, with_keys: bool) -> io::Result<()> {
        let mut entries = std::mem::take(&mut self.entries);
        entries.sort_unstable_by(|a, b| self.parts(a).cmp(&self.parts(b)));
        for e in &entries {
            let (key, line) = self.parts(e);
            if with_keys {
                w.write_all(key.as_bytes())?;
                w.write_all(b"\t")?;
            }
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        entries.clear();
        self.entries = entries;
        self.arena.clear();
        Ok(())
    }

    fn spill(&mut self, dir: &Path, index: usize) -> Result<PathBuf, SortError> {
        let path = dir.join(format!("run-{index}"));
        let f = File::create(&path).context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::with_capacity(IO_BUFFER, f);
        self.write_sorted(&mut w, true)
            .and_then(|_| w.flush())
            .context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// A run record `key\tline` with its split point.
struct Head {
    text: String,
    split: usize,
    run: usize,
}

impl Head {
    fn parts(&self) -> (&str, &str) {
        (&self.text[..self.split], &self.text[self.split + 1..])
    }
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Head {}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Head {
    fn cmp(&self, other: &Self) -> Ordering {
        self.parts()
            .cmp(&other.parts())
            .then(self.run.cmp(&other.run))
    }
}

fn read_head(
    reader: &mut BufReader<File>,
    run: usize,
    path: &Path,
) -> Result<Option<Head>, SortError> {
    let mut text = String::new();
    let n = reader
        .read_line(&mut text)
        .context(|| format!("reading {}", path.display()))?;
    if n == 0 {
        return Ok(None);
    }
    if text.ends_with('\n') {
        text.pop();
    }
    let split = text.find('\t').ok_or_else(|| SortError::Io {
        context: format!("corrupt run file {}", path.display()),
        source: io::Error::new(io::ErrorKind::InvalidData, "missing key separator"),
    })?;
    Ok(Some(Head { text, split, run }))
}

fn merge(runs: &[PathBuf], mut w: impl Write, with_keys: bool) -> Result<(), SortError> {
    let mut readers = Vec::with_capacity(runs.len());
    let mut heap = BinaryHeap::with_capacity(runs.len());
    for (i, path) in runs.iter().enumerate() {
        let f = File::open(path).context(|| format!("opening {}", path.display()))?;
        let mut r = BufReader::with_capacity(IO_BUFFER, f);
        if let Some(head) = read_head(&mut r, i, path)? {
            heap.push(Reverse(head));
        }
        readers.push(r);
    }
    while let Some(Reverse(head)) = heap.pop() {
        let out = if with_keys {
            head.text.as_str()
        } else {
            head.parts().1
        };
        w.write_all(out.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .context(|| "writing merged output".into())?;
        if let Some(next) = read_head(&mut readers[head.run], head.run, &runs[head.run])? {
            heap.push(Reverse(next));
        }
    }
    w.flush().context(|| "writing merged output".into())
}
