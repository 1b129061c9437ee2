//! N-Triples terms, a line-level parser and the canonical serializer.
//!
//! The parser works on one physical line at a time, which is all N-Triples
//! needs: a statement never spans lines. Escape sequences are decoded while
//! parsing and re-applied by the serializer, so that
//! `parse_line(&triple.to_string())` yields the original triple.

mod reader;
mod sort;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use reader::{open_dataset, ParseError, ParseSummary, Record, StreamError, TripleReader};
pub use sort::{sort_by_subject, sort_key, SortError, SortSummary, MIN_MEMORY_BUDGET};

/// How a literal is qualified.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralTag {
    Plain,
    Datatype(String),
    Language(String),
}

/// An RDF term as it appears in an N-Triples statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    /// Blank node label without the `_:` prefix.
    BlankNode(String),
    Literal {
        lexical: String,
        tag: LiteralTag,
    },
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term::BlankNode(label.into())
    }

    pub fn literal(lexical: impl Into<String>) -> Self {
        Term::Literal {
            lexical: lexical.into(),
            tag: LiteralTag::Plain,
        }
    }

    pub fn typed_literal(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term::Literal {
            lexical: lexical.into(),
            tag: LiteralTag::Datatype(datatype.into()),
        }
    }

    pub fn lang_literal(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Term::Literal {
            lexical: lexical.into(),
            tag: LiteralTag::Language(language.into()),
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    /// The IRI string, if this term is an IRI.
    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    /// Append the canonical N-Triples form of this term to `out`.
    pub fn write_ntriples(&self, out: &mut String) {
        match self {
            Term::Iri(iri) => write_iri(iri, out),
            Term::BlankNode(label) => {
                out.push_str("_:");
                out.push_str(label);
            }
            Term::Literal { lexical, tag } => {
                out.push('"');
                if lexical
                    .bytes()
                    .any(|b| matches!(b, b'"' | b'\\' | b'\n' | b'\r'))
                {
                    for c in lexical.chars() {
                        match c {
                            '"' => out.push_str("\\\""),
                            '\\' => out.push_str("\\\\"),
                            '\n' => out.push_str("\\n"),
                            '\r' => out.push_str("\\r"),
                            c => out.push(c),
                        }
                    }
                } else {
                    out.push_str(lexical);
                }
                out.push('"');
                match tag {
                    LiteralTag::Plain => {}
                    LiteralTag::Datatype(dt) => {
                        out.push_str("^^");
                        write_iri(dt, out);
                    }
                    LiteralTag::Language(lang) => {
                        out.push('@');
                        out.push_str(lang);
                    }
                }
            }
        }
    }
}

fn write_iri(iri: &str, out: &mut String) {
    out.push('<');
    // Every forbidden character is ASCII.
    if iri
        .bytes()
        .any(|b| b.is_ascii() && is_iri_forbidden(b as char))
    {
        for c in iri.chars() {
            if is_iri_forbidden(c) {
                push_uchar(c, out);
            } else {
                out.push(c);
            }
        }
    } else {
        out.push_str(iri);
    }
    out.push('>');
}

fn push_uchar(c: char, out: &mut String) {
    use std::fmt::Write;
    let cp = c as u32;
    if cp <= 0xFFFF {
        let _ = write!(out, "\\u{cp:04X}");
    } else {
        let _ = write!(out, "\\U{cp:08X}");
    }
}

fn is_iri_forbidden(c: char) -> bool {
    matches!(
        c,
        '\u{0}'..='\u{20}' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'
    )
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_ntriples(&mut s);
        f.write_str(&s)
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// One N-Triples statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    /// Builds a triple, checking the positional constraints: the subject
    /// must not be a literal and the predicate must be an IRI.
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, SyntaxError> {
        if subject.is_literal() {
            return Err(SyntaxError::new(0, "literal in subject position"));
        }
        if !matches!(predicate, Term::Iri(_)) {
            return Err(SyntaxError::new(0, "predicate must be an IRI"));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    /// Canonical single-line form, terminated by ` .` (no newline).
    pub fn to_ntriples(&self) -> String {
        let mut out = String::with_capacity(96);
        self.write_ntriples(&mut out);
        out
    }

    pub fn write_ntriples(&self, out: &mut String) {
        self.subject.write_ntriples(out);
        out.push(' ');
        self.predicate.write_ntriples(out);
        out.push(' ');
        self.object.write_ntriples(out);
        out.push_str(" .");
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ntriples())
    }
}

/// A malformed line: byte offset into the line and a reason.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("byte {offset}: {reason}")]
pub struct SyntaxError {
    pub offset: usize,
    pub reason: String,
}

impl SyntaxError {
    fn new(offset: usize, reason: impl Into<String>) -> Self {
        SyntaxError {
            offset,
            reason: reason.into(),
        }
    }
}

/// Parses one physical line. `Ok(None)` means the line carries no statement
/// (blank or comment). A trailing `\r` is tolerated.
pub fn parse_line(line: &str) -> Result<Option<Triple>, SyntaxError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut p = LineParser { src: line, pos: 0 };
    p.skip_ws();
    if p.at_end() || p.peek() == Some('#') {
        return Ok(None);
    }

    let subject = match p.peek() {
        Some('<') => Term::Iri(p.iri()?),
        Some('_') => Term::BlankNode(p.blank_node()?),
        Some('"') => return Err(p.err("literal in subject position")),
        _ => return Err(p.err("expected IRI or blank node as subject")),
    };
    p.skip_ws();
    let predicate = match p.peek() {
        Some('<') => Term::Iri(p.iri()?),
        _ => return Err(p.err("predicate must be an IRI")),
    };
    p.skip_ws();
    let object = match p.peek() {
        Some('<') => Term::Iri(p.iri()?),
        Some('_') => Term::BlankNode(p.blank_node()?),
        Some('"') => p.literal()?,
        None => return Err(p.err("missing object")),
        _ => return Err(p.err("expected IRI, blank node or literal as object")),
    };
    p.skip_ws();
    if p.peek() != Some('.') {
        return Err(p.err("expected '.' at end of statement"));
    }
    p.pos += 1;
    p.skip_ws();
    if !p.at_end() && p.peek() != Some('#') {
        return Err(p.err("trailing content after '.'"));
    }
    Ok(Some(Triple {
        subject,
        predicate,
        object,
    }))
}

struct LineParser<'a> {
    src: &'a str,
    pos: usize,
}

impl LineParser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn err(&self, reason: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.pos, reason)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: char) -> Result<(), SyntaxError> {
        match self.bump() {
            Some(c) if c == want => Ok(()),
            _ => Err(SyntaxError::new(self.pos, format!("expected '{want}'"))),
        }
    }

    fn iri(&mut self) -> Result<String, SyntaxError> {
        let start = self.pos;
        self.expect('<')?;
        let mut out = String::new();
        loop {
            let here = self.pos;
            match self.bump() {
                None => return Err(SyntaxError::new(here, "unterminated IRI")),
                Some('>') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('u') => self.hex_escape(4, here)?,
                        Some('U') => self.hex_escape(8, here)?,
                        _ => return Err(SyntaxError::new(here, "invalid escape in IRI")),
                    };
                    out.push(c);
                }
                Some(c) if is_iri_forbidden(c) => {
                    return Err(SyntaxError::new(
                        here,
                        format!("character {c:?} not allowed in IRI"),
                    ));
                }
                Some(c) => out.push(c),
            }
        }
        if out.is_empty() {
            return Err(SyntaxError::new(start, "empty IRI"));
        }
        if out.chars().any(char::is_whitespace) {
            return Err(SyntaxError::new(start, "whitespace in IRI"));
        }
        if !has_scheme(&out) {
            return Err(SyntaxError::new(start, "relative IRI"));
        }
        Ok(out)
    }

    fn hex_escape(&mut self, digits: usize, at: usize) -> Result<char, SyntaxError> {
        let end = self.pos + digits;
        let hex = self
            .src
            .get(self.pos..end)
            .filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| SyntaxError::new(at, "malformed unicode escape"))?;
        let cp = u32::from_str_radix(hex, 16)
            .map_err(|_| SyntaxError::new(at, "malformed unicode escape"))?;
        self.pos = end;
        char::from_u32(cp)
            .ok_or_else(|| SyntaxError::new(at, "escape is not a unicode scalar value"))
    }

    fn blank_node(&mut self) -> Result<String, SyntaxError> {
        let start = self.pos;
        if !self.src[self.pos..].starts_with("_:") {
            return Err(self.err("expected '_:'"));
        }
        self.pos += 2;
        let label_start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphanumeric() || c == '_' || !c.is_ascii() => {
                self.bump();
            }
            _ => return Err(SyntaxError::new(start, "empty or invalid blank node label")),
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric()
                || matches!(c, '_' | '-' | '.')
                || (!c.is_ascii() && !c.is_whitespace())
            {
                self.bump();
            } else {
                break;
            }
        }
        // A label cannot end with '.'; that dot terminates the statement.
        while self.src[label_start..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        Ok(self.src[label_start..self.pos].to_owned())
    }

    fn literal(&mut self) -> Result<Term, SyntaxError> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            let here = self.pos;
            match self.bump() {
                None => return Err(SyntaxError::new(here, "unterminated literal")),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_escape(4, here)?,
                        Some('U') => self.hex_escape(8, here)?,
                        _ => return Err(SyntaxError::new(here, "invalid escape in literal")),
                    };
                    lexical.push(c);
                }
                Some('\n' | '\r') => {
                    return Err(SyntaxError::new(here, "raw line break in literal"))
                }
                Some(c) => lexical.push(c),
            }
        }
        let tag = match self.peek() {
            Some('@') => {
                self.pos += 1;
                let start = self.pos;
                let mut seen_subtag = false;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphabetic() || (seen_subtag && c.is_ascii_digit()) {
                        self.pos += 1;
                    } else if c == '-' && self.pos > start {
                        seen_subtag = true;
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let lang = &self.src[start..self.pos];
                if lang.is_empty() || lang.ends_with('-') {
                    return Err(SyntaxError::new(start, "malformed language tag"));
                }
                LiteralTag::Language(lang.to_owned())
            }
            Some('^') => {
                if !self.src[self.pos..].starts_with("^^") {
                    return Err(self.err("expected '^^'"));
                }
                self.pos += 2;
                if self.peek() != Some('<') {
                    return Err(self.err("datatype must be an IRI"));
                }
                LiteralTag::Datatype(self.iri()?)
            }
            _ => LiteralTag::Plain,
        };
        Ok(Term::Literal { lexical, tag })
    }
}

fn has_scheme(iri: &str) -> bool {
    let Some(colon) = iri.find(':') else {
        return false;
    };
    let scheme = &iri[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}
