//! Generative commonsense knowledge behind one query interface.
//!
//! A [`KnowledgeSource`] answers `query(relation, subject, beam)` with a
//! ranked beam of objects. Two backends exist: [`StaticTupleStore`], which
//! replays tuples from a file, and [`RemoteGenerator`], which speaks the
//! `POST /generate` protocol to a generation server. [`emulator`] serves a
//! static store over that same protocol.

pub mod emulator;
mod registry;
mod remote;
mod static_store;

use std::cmp::Ordering;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use registry::{default_registry, Direction, KnowledgeGraph, Relation, RelationRegistry};
pub use remote::RemoteGenerator;
pub use static_store::{load_static_kb, StaticTupleStore};

/// Default number of objects requested per query.
pub const DEFAULT_KB_BEAM: usize = 10;

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("unknown relation `{relation}`{}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    UnknownRelation { relation: String, line: Option<usize> },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid relation registry: {0}")]
    InvalidRegistry(String),
    #[error("generation backend unavailable after {attempts} attempts: {message}")]
    BackendUnavailable { attempts: usize, message: String },
    #[error("malformed generation response: {0}")]
    MalformedResponse(String),
    #[error("reading knowledge file: {0}")]
    Io(#[from] std::io::Error),
}

/// One `{s, r, o}` fact with its generation confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeTuple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub score: f64,
}

/// One generated object with its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamEntry {
    pub text: String,
    pub score: f64,
}

/// Ranked objects for a single query, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamResult {
    pub objects: Vec<BeamEntry>,
    pub beam_size: usize,
}

impl BeamResult {
    pub fn empty(beam_size: usize) -> Self {
        Self {
            objects: Vec::new(),
            beam_size,
        }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

/// Score descending, then object text ascending.
pub fn beam_order(a: &BeamEntry, b: &BeamEntry) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.text.cmp(&b.text))
}

pub trait KnowledgeSource: Send + Sync {
    fn registry(&self) -> &RelationRegistry;

    /// Objects for `(relation, subject)`, at most `beam` of them.
    fn query(&self, relation: &str, subject: &str, beam: usize) -> Result<BeamResult, KnowledgeError>;
}

impl<T: KnowledgeSource + ?Sized> KnowledgeSource for Box<T> {
    fn registry(&self) -> &RelationRegistry {
        (**self).registry()
    }

    fn query(&self, relation: &str, subject: &str, beam: usize) -> Result<BeamResult, KnowledgeError> {
        (**self).query(relation, subject, beam)
    }
}

impl<T: KnowledgeSource + ?Sized> KnowledgeSource for std::sync::Arc<T> {
    fn registry(&self) -> &RelationRegistry {
        (**self).registry()
    }

    fn query(&self, relation: &str, subject: &str, beam: usize) -> Result<BeamResult, KnowledgeError> {
        (**self).query(relation, subject, beam)
    }
}

pub(crate) fn check_query(
    registry: &RelationRegistry,
    relation: &str,
    subject: &str,
    beam: usize,
) -> Result<(), KnowledgeError> {
    if registry.get(relation).is_none() {
        return Err(KnowledgeError::UnknownRelation {
            relation: relation.to_owned(),
            line: None,
        });
    }
    if beam == 0 {
        return Err(KnowledgeError::InvalidQuery("beam size must be at least 1".into()));
    }
    if subject.trim().is_empty() {
        return Err(KnowledgeError::InvalidQuery("subject must not be empty".into()));
    }
    Ok(())
}

/// Wraps a source and counts the queries issued through it.
pub struct CountingSource<S> {
    inner: S,
    queries: AtomicUsize,
}

impl<S: KnowledgeSource> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            queries: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.queries.load(AtomicOrdering::SeqCst)
    }

    pub fn reset(&self) {
        self.queries.store(0, AtomicOrdering::SeqCst);
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: KnowledgeSource> KnowledgeSource for CountingSource<S> {
    fn registry(&self) -> &RelationRegistry {
        self.inner.registry()
    }

    fn query(&self, relation: &str, subject: &str, beam: usize) -> Result<BeamResult, KnowledgeError> {
        self.queries.fetch_add(1, AtomicOrdering::SeqCst);
        self.inner.query(relation, subject, beam)
    }
}
