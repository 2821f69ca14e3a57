//! Token embeddings loaded from a whitespace-separated text file, averaged
//! into phrase vectors and compared by cosine similarity.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding file is empty")]
    EmptyFile,
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("reading embeddings: {0}")]
    Io(#[from] std::io::Error),
}

/// Immutable token -> vector table.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

/// Mean of the in-vocabulary token vectors of a phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseVector {
    pub vector: Vec<f64>,
    pub in_vocab_count: usize,
}

impl PhraseVector {
    pub fn is_zero(&self) -> bool {
        self.in_vocab_count == 0
    }
}

impl EmbeddingTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Parses `token v1 ... vd` records. The first record fixes `d`; later
    /// duplicates of a token are ignored.
    pub fn parse(content: &str) -> Result<Self, EmbeddingError> {
        let mut dimension = None;
        let mut entries = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let vector = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|e| EmbeddingError::Parse {
                        line: line_no,
                        message: format!("bad component `{f}`: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::Parse {
                    line: line_no,
                    message: "non-finite component".into(),
                });
            }
            let expected = *dimension.get_or_insert(vector.len());
            if expected == 0 {
                return Err(EmbeddingError::Parse {
                    line: line_no,
                    message: "record has no vector components".into(),
                });
            }
            if vector.len() != expected {
                return Err(EmbeddingError::DimensionMismatch {
                    line: line_no,
                    expected,
                    found: vector.len(),
                });
            }
            entries.entry(token.to_lowercase()).or_insert(vector);
        }
        match dimension {
            Some(dimension) => Ok(Self { dimension, entries }),
            None => Err(EmbeddingError::EmptyFile),
        }
    }

    /// Builds a table from in-memory vectors. Panics when the vectors are
    /// ragged or the map is empty; meant for tests and generated tables.
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut map = HashMap::new();
        let mut dimension = None;
        for (token, vector) in entries {
            let d = *dimension.get_or_insert(vector.len());
            assert_eq!(d, vector.len(), "ragged embedding entries");
            map.entry(token.into().to_lowercase()).or_insert(vector);
        }
        Self {
            dimension: dimension.expect("embedding table must not be empty"),
            entries: map,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Returns a copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dimension: self.dimension,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect()))
                .collect(),
        }
    }

    pub fn embed_phrase(&self, phrase: &str) -> PhraseVector {
        let mut sum = vec![0.0; self.dimension];
        let mut count = 0usize;
        for token in text::tokens(phrase) {
            if let Some(v) = self.entries.get(&token) {
                for (acc, x) in sum.iter_mut().zip(v) {
                    *acc += x;
                }
                count += 1;
            }
        }
        if count > 0 {
            let n = count as f64;
            sum.iter_mut().for_each(|x| *x /= n);
        }
        PhraseVector {
            vector: sum,
            in_vocab_count: count,
        }
    }

    /// Cosine similarity of two phrases.
    pub fn phrase_closeness(&self, a: &str, b: &str) -> f64 {
        closeness(&self.embed_phrase(a), &self.embed_phrase(b))
    }
}

/// Cosine similarity clamped to [-1, 1]; 0 when either side is the zero vector.
pub fn closeness(a: &PhraseVector, b: &PhraseVector) -> f64 {
    if a.is_zero() || b.is_zero() {
        return 0.0;
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.vector.iter().zip(&b.vector) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = na.sqrt() * nb.sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (dot / denom).clamp(-1.0, 1.0)
}

/// Memoizes phrase vectors for one search or dialog step.
pub struct PhraseCache<'a> {
    table: &'a EmbeddingTable,
    cache: HashMap<String, PhraseVector>,
}

impl<'a> PhraseCache<'a> {
    pub fn new(table: &'a EmbeddingTable) -> Self {
        Self {
            table,
            cache: HashMap::new(),
        }
    }

    fn vector(&mut self, phrase: &str) -> PhraseVector {
        let key = text::normalize(phrase);
        if let Some(v) = self.cache.get(&key) {
            return v.clone();
        }
        let v = self.table.embed_phrase(&key);
        self.cache.insert(key, v.clone());
        v
    }

    pub fn closeness(&mut self, a: &str, b: &str) -> f64 {
        let va = self.vector(a);
        let vb = self.vector(b);
        closeness(&va, &vb)
    }
}
