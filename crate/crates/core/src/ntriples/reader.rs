//! Streaming reader over an N-Triples byte source.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use super::{parse_line, SyntaxError, Triple};

const READ_BUFFER: usize = 64 * 1024;
const LINE_BUFFER: usize = 8 * 1024;

/// A line that failed to parse. The line is dropped; reading continues.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("line {line}, byte {offset}: {reason}")]
pub struct ParseError {
    /// 1-based line number.
    pub line: u64,
    /// Byte offset within the line.
    pub offset: usize,
    pub reason: String,
}

/// Fatal I/O failure while streaming.
#[derive(Debug, Error)]
#[error("I/O error after {bytes_consumed} bytes: {source}")]
pub struct StreamError {
    pub bytes_consumed: u64,
    #[source]
    pub source: io::Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Triple(Triple),
    Error(ParseError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseSummary {
    pub lines_read: u64,
    pub triples: u64,
    pub parse_errors: u64,
    pub bytes_read: u64,
}

/// Iterator of [`Record`]s in file order. Memory use is bounded by the read
/// buffer plus the longest line seen since the last shrink.
pub struct TripleReader<R> {
    inner: R,
    buf: Vec<u8>,
    summary: ParseSummary,
    failed: bool,
}

impl<R: BufRead> TripleReader<R> {
    pub fn new(inner: R) -> Self {
        TripleReader {
            inner,
            buf: Vec::with_capacity(LINE_BUFFER),
            summary: ParseSummary::default(),
            failed: false,
        }
    }

    /// Counters so far; final once the iterator returns `None`.
    pub fn summary(&self) -> ParseSummary {
        self.summary
    }
}

/// Opens a file for streaming.
pub fn open_dataset(path: impl AsRef<Path>) -> io::Result<TripleReader<BufReader<File>>> {
    let file = File::open(path)?;
    Ok(TripleReader::new(BufReader::with_capacity(
        READ_BUFFER,
        file,
    )))
}

impl<R: BufRead> Iterator for TripleReader<R> {
    type Item = Result<Record, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            if self.buf.capacity() > 16 * LINE_BUFFER {
                self.buf = Vec::with_capacity(LINE_BUFFER);
            }
            self.buf.clear();
            let n = match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(source) => {
                    self.failed = true;
                    return Some(Err(StreamError {
                        bytes_consumed: self.summary.bytes_read,
                        source,
                    }));
                }
            };
            self.summary.bytes_read += n as u64;
            self.summary.lines_read += 1;
            let line_no = self.summary.lines_read;

            let text = match std::str::from_utf8(&self.buf) {
                Ok(text) => text,
                Err(e) => {
                    self.summary.parse_errors += 1;
                    return Some(Ok(Record::Error(ParseError {
                        line: line_no,
                        offset: e.valid_up_to(),
                        reason: "invalid UTF-8".into(),
                    })));
                }
            };
            match parse_line(text) {
                Ok(None) => continue,
                Ok(Some(triple)) => {
                    self.summary.triples += 1;
                    return Some(Ok(Record::Triple(triple)));
                }
                Err(SyntaxError { offset, reason }) => {
                    self.summary.parse_errors += 1;
                    return Some(Ok(Record::Error(ParseError {
                        line: line_no,
                        offset,
                        reason,
                    })));
                }
            }
        }
    }
}
