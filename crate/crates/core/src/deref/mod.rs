//! Dereferenceability of individual URIs.
//!
//! A resource URI is dereferenceable when it is a hash URI whose document
//! answers `200` with an RDF media type, or a slash URI whose first response
//! is `303 See Other` and whose redirect chain ends in `200` with an RDF
//! media type. A slash URI answering `200` directly does not qualify.
//!
//! Network access sits behind [`Resolver`]. [`MockResolver`] answers from a
//! script and backs every test; [`HttpResolver`] talks to the live web.

mod cache;
mod http;
mod mock;

use std::fmt;

use serde::Serialize;
use thiserror::Error;
use url::Url;

pub use cache::CachedResolver;
pub use http::{HttpResolver, HttpResolverConfig};
pub use mock::{MockResolver, MockResponse, MockScriptError};

pub const DEFAULT_MAX_REDIRECTS: usize = 10;

/// Media types accepted as an RDF description.
pub const RDF_CONTENT_TYPES: &[&str] = &[
    "text/turtle",
    "application/rdf+xml",
    "application/n-triples",
    "application/ld+json",
];

/// Outcome of requesting a URI and following its redirects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Resolution {
    pub requested_uri: String,
    /// Status of every hop, in order.
    pub status_chain: Vec<u16>,
    /// Content type of the final response.
    pub content_type: Option<String>,
    pub transport_error: Option<String>,
}

impl Resolution {
    pub fn final_status(&self) -> Option<u16> {
        self.status_chain.last().copied()
    }

    pub fn failed(uri: &str, chain: Vec<u16>, error: impl Into<String>) -> Self {
        Resolution {
            requested_uri: uri.to_owned(),
            status_chain: chain,
            content_type: None,
            transport_error: Some(error.into()),
        }
    }
}

/// Something that can resolve a URI, following at most `max_redirects`
/// redirects and recording every status.
pub trait Resolver: Send + Sync {
    fn resolve(&self, uri: &str) -> Resolution;

    fn max_redirects(&self) -> usize {
        DEFAULT_MAX_REDIRECTS
    }
}

impl<R: Resolver + ?Sized> Resolver for &R {
    fn resolve(&self, uri: &str) -> Resolution {
        (**self).resolve(uri)
    }

    fn max_redirects(&self) -> usize {
        (**self).max_redirects()
    }
}

impl<R: Resolver + ?Sized> Resolver for Box<R> {
    fn resolve(&self, uri: &str) -> Resolution {
        (**self).resolve(uri)
    }

    fn max_redirects(&self) -> usize {
        (**self).max_redirects()
    }
}

impl<R: Resolver + ?Sized> Resolver for std::sync::Arc<R> {
    fn resolve(&self, uri: &str) -> Resolution {
        (**self).resolve(uri)
    }

    fn max_redirects(&self) -> usize {
        (**self).max_redirects()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", content = "detail", rename_all = "kebab-case")]
pub enum NotDereferenceable {
    /// Slash URI answered without a `303`.
    No303 {
        first_status: u16,
    },
    HttpStatus(u16),
    NonRdfContent(Option<String>),
    Transport(String),
}

impl fmt::Display for NotDereferenceable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotDereferenceable::No303 { first_status } => {
                write!(f, "no 303 (first status {first_status})")
            }
            NotDereferenceable::HttpStatus(s) => write!(f, "HTTP {s}"),
            NotDereferenceable::NonRdfContent(Some(ct)) => write!(f, "non-RDF content type {ct}"),
            NotDereferenceable::NonRdfContent(None) => f.write_str("missing content type"),
            NotDereferenceable::Transport(e) => write!(f, "transport error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    DereferenceableHash,
    Dereferenceable303,
    NotDereferenceable(NotDereferenceable),
}

impl Verdict {
    pub fn is_dereferenceable(&self) -> bool {
        !matches!(self, Verdict::NotDereferenceable(_))
    }

    pub fn is_transport_failure(&self) -> bool {
        matches!(
            self,
            Verdict::NotDereferenceable(NotDereferenceable::Transport(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerefError {
    #[error("not an absolute http(s) URI: {0}")]
    MalformedUri(String),
}

/// Whether a `Content-Type` value names an RDF serialization.
pub fn is_rdf_content_type(content_type: &str) -> bool {
    let essence = content_type.split(';').next().unwrap_or("").trim();
    RDF_CONTENT_TYPES
        .iter()
        .any(|t| t.eq_ignore_ascii_case(essence))
}

fn check_http_uri(uri: &str) -> Result<Url, DerefError> {
    let parsed = Url::parse(uri).map_err(|_| DerefError::MalformedUri(uri.to_owned()))?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none_or(str::is_empty) {
        return Err(DerefError::MalformedUri(uri.to_owned()));
    }
    Ok(parsed)
}

fn final_rdf_document(res: &Resolution) -> Result<(), NotDereferenceable> {
    if let Some(e) = &res.transport_error {
        return Err(NotDereferenceable::Transport(e.clone()));
    }
    match res.final_status() {
        Some(200) => {}
        Some(s) => return Err(NotDereferenceable::HttpStatus(s)),
        None => return Err(NotDereferenceable::Transport("no response".into())),
    }
    match &res.content_type {
        Some(ct) if is_rdf_content_type(ct) => Ok(()),
        other => Err(NotDereferenceable::NonRdfContent(other.clone())),
    }
}

/// Classifies one URI.
pub fn classify(uri: &str, resolver: &dyn Resolver) -> Result<Verdict, DerefError> {
    check_http_uri(uri)?;
    if let Some((document, _fragment)) = uri.split_once('#') {
        let res = resolver.resolve(document);
        return Ok(match final_rdf_document(&res) {
            Ok(()) => Verdict::DereferenceableHash,
            Err(reason) => Verdict::NotDereferenceable(reason),
        });
    }
    let res = resolver.resolve(uri);
    if let Some(e) = &res.transport_error {
        if res.status_chain.first() != Some(&303) {
            return Ok(Verdict::NotDereferenceable(NotDereferenceable::Transport(
                e.clone(),
            )));
        }
    }
    Ok(match res.status_chain.first() {
        Some(303) => match final_rdf_document(&res) {
            Ok(()) => Verdict::Dereferenceable303,
            Err(reason) => Verdict::NotDereferenceable(reason),
        },
        Some(&s) if (400..600).contains(&s) => {
            Verdict::NotDereferenceable(NotDereferenceable::HttpStatus(s))
        }
        Some(&s) => Verdict::NotDereferenceable(NotDereferenceable::No303 { first_status: s }),
        None => Verdict::NotDereferenceable(NotDereferenceable::Transport("no response".into())),
    })
}

/// Root URI probed for a pay-level domain.
pub fn pld_root(pld: &str) -> String {
    format!("http://{pld}/")
}

/// `false` iff the root answers 4xx/5xx or cannot be reached.
pub fn pld_alive(root: &str, resolver: &dyn Resolver) -> bool {
    let res = resolver.resolve(root);
    if res.transport_error.is_some() {
        return false;
    }
    !matches!(res.final_status(), Some(400..=599) | None)
}
