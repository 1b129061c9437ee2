//! Pay-level domain extraction against a bundled public suffix list.

use std::sync::OnceLock;

use publicsuffix::{List, Psl};
use thiserror::Error;

use crate::ntriples::Term;

static SNAPSHOT: &str = include_str!("../../data/public_suffix_list.dat");

fn list() -> &'static List {
    static LIST: OnceLock<List> = OnceLock::new();
    LIST.get_or_init(|| SNAPSHOT.parse().expect("bundled public suffix list parses"))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NoPld {
    #[error("not an http(s) IRI")]
    NotHttp,
    #[error("IRI has no host")]
    NoHost,
    #[error("blank nodes and literals have no PLD")]
    NotIri,
}

/// Host of an absolute http(s) IRI, lowercased, without userinfo or port.
pub fn http_host(iri: &str) -> Result<String, NoPld> {
    let rest = strip_scheme(iri).ok_or(NoPld::NotHttp)?;
    let authority = rest.split(['/', '?', '#']).next().unwrap_or("");
    let host_port = authority.rsplit_once('@').map_or(authority, |(_, h)| h);
    let host = if let Some(v6) = host_port.strip_prefix('[') {
        v6.split_once(']').map(|(h, _)| h).ok_or(NoPld::NoHost)?
    } else {
        host_port.split(':').next().unwrap_or("")
    };
    let host = host.trim_end_matches('.');
    if host.is_empty() {
        return Err(NoPld::NoHost);
    }
    Ok(host.to_ascii_lowercase())
}

fn strip_scheme(iri: &str) -> Option<&str> {
    let (scheme, rest) = iri.split_once("://")?;
    (scheme.eq_ignore_ascii_case("http") || scheme.eq_ignore_ascii_case("https")).then_some(rest)
}

/// Registrable domain of an http(s) IRI: one label beyond the public suffix.
///
/// Hosts under a suffix missing from the list keep their last two labels.
/// IP literals and single-label hosts are returned unchanged.
pub fn pld(iri: &str) -> Result<String, NoPld> {
    let host = http_host(iri)?;
    if host.parse::<std::net::IpAddr>().is_ok() || !host.contains('.') {
        return Ok(host);
    }
    if let Some(d) = list().domain(host.as_bytes()) {
        if d.suffix().is_known() {
            return Ok(String::from_utf8_lossy(d.as_bytes()).into_owned());
        }
    }
    Ok(last_labels(&host, 2).to_owned())
}

fn last_labels(host: &str, n: usize) -> &str {
    match host.rmatch_indices('.').nth(n - 1) {
        Some((i, _)) => &host[i + 1..],
        None => host,
    }
}

pub fn term_pld(term: &Term) -> Result<String, NoPld> {
    match term.as_iri() {
        Some(iri) => pld(iri),
        None => Err(NoPld::NotIri),
    }
}
