//! Base PLD of a dataset.
//!
//! The first subject typed `void:Dataset` or `owl:Ontology` fixes the base.
//! Without such a declaration the base is the PLD seen most often among
//! subjects, ties going to the lexicographically smallest.

use std::collections::HashMap;

use crate::ntriples::{Term, Triple};

use super::pld::term_pld;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const VOID_DATASET: &str = "http://rdfs.org/ns/void#Dataset";
pub const OWL_ONTOLOGY: &str = "http://www.w3.org/2002/07/owl#Ontology";

#[derive(Debug, Clone, Default)]
pub struct BaseUriDetector {
    declared: Option<String>,
    frequency: HashMap<String, u64>,
    last_subject: Option<(Term, Option<String>)>,
}

impl BaseUriDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, t: &Triple) {
        // Consecutive triples usually share a subject; reuse its PLD.
        let subject_pld = match &self.last_subject {
            Some((s, p)) if *s == t.subject => p.clone(),
            _ => {
                let p = term_pld(&t.subject).ok();
                self.last_subject = Some((t.subject.clone(), p.clone()));
                p
            }
        };
        let Some(subject_pld) = subject_pld else {
            return;
        };
        if self.declared.is_none()
            && t.predicate.as_iri() == Some(RDF_TYPE)
            && matches!(t.object.as_iri(), Some(VOID_DATASET | OWL_ONTOLOGY))
        {
            self.declared = Some(subject_pld.clone());
        }
        *self.frequency.entry(subject_pld).or_default() += 1;
    }

    pub fn declared(&self) -> Option<&str> {
        self.declared.as_deref()
    }

    /// The detected base PLD, or `None` if no subject had one.
    pub fn base(&self) -> Option<String> {
        if let Some(d) = &self.declared {
            return Some(d.clone());
        }
        self.frequency
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(pld, _)| pld.clone())
    }
}

/// Base PLD of a whole triple sequence.
pub fn detect_base_uri<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Option<String> {
    let mut d = BaseUriDetector::new();
    for t in triples {
        d.observe(t);
    }
    d.base()
}
