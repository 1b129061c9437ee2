//! Scripted resolver.
//!
//! A script maps URI patterns to an ordered list of responses, one per hop.
//! Patterns are either an exact URI or a prefix ending in `*`; exact matches
//! win, then the longest prefix. When a redirect is answered and the script
//! has further entries, the next entry answers the next hop. When the script
//! is exhausted on a redirect, the `Location` target is looked up as a fresh
//! URI. Unmatched URIs answer `404`.
//!
//! On disk a script is JSON Lines, one mapping per line:
//!
//! ```text
//! {"pattern": "http://a.org/res", "responses": [{"status": 303, "location": "http://a.org/res.ttl"}, {"status": 200, "content_type": "text/turtle"}]}
//! {"pattern": "http://dead.org/*", "responses": [{"status": 500}]}
//! {"pattern": "http://slow.org/*", "responses": [{"error": "timed out"}]}
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Resolution, Resolver, DEFAULT_MAX_REDIRECTS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockResponse {
    #[serde(default)]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    /// Simulated transport failure; `status` is ignored when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MockResponse {
    pub fn status(status: u16) -> Self {
        MockResponse {
            status: Some(status),
            location: None,
            content_type: None,
            error: None,
        }
    }

    pub fn ok(content_type: &str) -> Self {
        MockResponse {
            content_type: Some(content_type.to_owned()),
            ..Self::status(200)
        }
    }

    pub fn redirect(status: u16, location: &str) -> Self {
        MockResponse {
            location: Some(location.to_owned()),
            ..Self::status(status)
        }
    }

    pub fn error(message: &str) -> Self {
        MockResponse {
            status: None,
            location: None,
            content_type: None,
            error: Some(message.to_owned()),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ScriptRecord {
    pattern: String,
    responses: Vec<MockResponse>,
}

#[derive(Debug, Error)]
pub enum MockScriptError {
    #[error("reading mock script: {0}")]
    Io(#[from] std::io::Error),
    #[error("mock script line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Default)]
pub struct MockResolver {
    exact: HashMap<String, Vec<MockResponse>>,
    /// Sorted by descending prefix length.
    prefixes: Vec<(String, Vec<MockResponse>)>,
    max_redirects: Option<usize>,
    resolve_calls: AtomicU64,
    hop_requests: AtomicU64,
    per_uri: Mutex<HashMap<String, u64>>,
}

impl MockResolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_max_redirects(mut self, n: usize) -> Self {
        self.max_redirects = Some(n);
        self
    }

    pub fn route(&mut self, pattern: &str, responses: Vec<MockResponse>) -> &mut Self {
        match pattern.strip_suffix('*') {
            Some(prefix) => {
                self.prefixes.retain(|(p, _)| p != prefix);
                self.prefixes.push((prefix.to_owned(), responses));
                self.prefixes
                    .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
            }
            None => {
                self.exact.insert(pattern.to_owned(), responses);
            }
        }
        self
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, MockScriptError> {
        let mut mock = MockResolver::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let record: ScriptRecord =
                serde_json::from_str(trimmed).map_err(|e| MockScriptError::Syntax {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if record.responses.is_empty() {
                return Err(MockScriptError::Syntax {
                    line: i + 1,
                    message: "empty response list".into(),
                });
            }
            if let Some(bad) = record
                .responses
                .iter()
                .find(|r| r.status.is_none() && r.error.is_none())
            {
                return Err(MockScriptError::Syntax {
                    line: i + 1,
                    message: format!("response needs a status or an error: {bad:?}"),
                });
            }
            mock.route(&record.pattern, record.responses);
        }
        Ok(mock)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, MockScriptError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    fn script_for(&self, uri: &str) -> Option<&[MockResponse]> {
        if let Some(s) = self.exact.get(uri) {
            return Some(s);
        }
        self.prefixes
            .iter()
            .find(|(p, _)| uri.starts_with(p.as_str()))
            .map(|(_, s)| s.as_slice())
    }

    fn record_hop(&self, uri: &str) {
        self.hop_requests.fetch_add(1, Ordering::Relaxed);
        *self
            .per_uri
            .lock()
            .unwrap()
            .entry(uri.to_owned())
            .or_default() += 1;
    }

    /// Number of `resolve` calls received.
    pub fn resolve_calls(&self) -> u64 {
        self.resolve_calls.load(Ordering::Relaxed)
    }

    /// Number of simulated HTTP requests (one per hop).
    pub fn total_requests(&self) -> u64 {
        self.hop_requests.load(Ordering::Relaxed)
    }

    /// Simulated requests whose target was exactly `uri`.
    pub fn requests_for(&self, uri: &str) -> u64 {
        self.per_uri.lock().unwrap().get(uri).copied().unwrap_or(0)
    }
}

impl Resolver for MockResolver {
    fn resolve(&self, uri: &str) -> Resolution {
        self.resolve_calls.fetch_add(1, Ordering::Relaxed);
        let max = self.max_redirects();
        let mut chain = Vec::new();
        let mut target = uri.to_owned();
        let mut script: Vec<MockResponse> = self
            .script_for(&target)
            .map(<[_]>::to_vec)
            .unwrap_or_default();
        let mut step = 0usize;
        loop {
            self.record_hop(&target);
            let response = script
                .get(step)
                .cloned()
                .unwrap_or_else(|| MockResponse::status(404));
            if let Some(e) = response.error {
                return Resolution::failed(uri, chain, e);
            }
            let status = response.status.unwrap_or(404);
            chain.push(status);
            let is_redirect = (300..400).contains(&status) && status != 304;
            if !is_redirect {
                return Resolution {
                    requested_uri: uri.to_owned(),
                    status_chain: chain,
                    content_type: response.content_type,
                    transport_error: None,
                };
            }
            if chain.len() > max {
                return Resolution::failed(uri, chain, format!("redirect limit of {max} exceeded"));
            }
            if step + 1 < script.len() {
                step += 1;
                if let Some(loc) = response.location {
                    target = loc;
                }
            } else if let Some(loc) = response.location {
                script = self.script_for(&loc).map(<[_]>::to_vec).unwrap_or_default();
                target = loc;
                step = 0;
            } else {
                return Resolution::failed(uri, chain, "redirect without location");
            }
        }
    }

    fn max_redirects(&self) -> usize {
        self.max_redirects.unwrap_or(DEFAULT_MAX_REDIRECTS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCRIPT: &str = r#"
# comment
{"pattern": "http://a.org/res", "responses": [{"status": 303, "location": "http://a.org/res.ttl"}, {"status": 200, "content_type": "text/turtle"}]}
{"pattern": "http://a.org/*", "responses": [{"status": 200, "content_type": "text/html"}]}
{"pattern": "http://a.org/deep/*", "responses": [{"status": 410}]}
{"pattern": "http://slow.org/*", "responses": [{"error": "timed out"}]}
"#;

    #[test]
    fn parses_script_and_matches_patterns() {
        let m = MockResolver::from_reader(SCRIPT.as_bytes()).unwrap();
        let r = m.resolve("http://a.org/res");
        assert_eq!(r.status_chain, vec![303, 200]);
        assert_eq!(r.content_type.as_deref(), Some("text/turtle"));
        assert_eq!(m.resolve("http://a.org/other").status_chain, vec![200]);
        assert_eq!(m.resolve("http://a.org/deep/x").status_chain, vec![410]);
        assert_eq!(m.resolve("http://nowhere.org/").status_chain, vec![404]);
        let r = m.resolve("http://slow.org/x");
        assert!(r.status_chain.is_empty());
        assert_eq!(r.transport_error.as_deref(), Some("timed out"));
        assert_eq!(m.resolve_calls(), 5);
        assert_eq!(m.requests_for("http://a.org/res.ttl"), 1);
    }

    #[test]
    fn rejects_bad_lines() {
        let err = MockResolver::from_reader("{\"pattern\": \"x\"}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MockScriptError::Syntax { line: 1, .. }));
        let err = MockResolver::from_reader("\n{\"pattern\": \"x\", \"responses\": []}".as_bytes())
            .unwrap_err();
        assert!(matches!(err, MockScriptError::Syntax { line: 2, .. }));
        let err = MockResolver::from_reader("{\"pattern\": \"x\", \"responses\": [{}]}".as_bytes())
            .unwrap_err();
        assert!(matches!(err, MockScriptError::Syntax { .. }));
    }

    #[test]
    fn hop_count_is_bounded() {
        let mut m = MockResolver::new().with_max_redirects(2);
        m.route(
            "http://l.org/*",
            vec![MockResponse::redirect(302, "http://l.org/again")],
        );
        let r = m.resolve("http://l.org/start");
        assert!(r.transport_error.is_some());
        assert_eq!(r.status_chain.len(), 3);
        assert_eq!(m.total_requests(), 3);
    }
}
