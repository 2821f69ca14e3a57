use std::collections::HashMap;
use std::path::Path;

use super::{
    beam_order, check_query, BeamEntry, BeamResult, KnowledgeError, KnowledgeSource, KnowledgeTuple, RelationRegistry,
};
use crate::text;

/// Tuple store answering queries by exact normalized subject match.
#[derive(Debug, Clone)]
pub struct StaticTupleStore {
    registry: RelationRegistry,
    beams: HashMap<(String, String), Vec<BeamEntry>>,
    tuple_count: usize,
}

impl StaticTupleStore {
    pub fn new(registry: RelationRegistry) -> Self {
        Self {
            registry,
            beams: HashMap::new(),
            tuple_count: 0,
        }
    }

    pub fn from_tuples(
        registry: RelationRegistry,
        tuples: impl IntoIterator<Item = KnowledgeTuple>,
    ) -> Result<Self, KnowledgeError> {
        let mut store = Self::new(registry);
        for t in tuples {
            store.insert(t)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, tuple: KnowledgeTuple) -> Result<(), KnowledgeError> {
        if self.registry.get(&tuple.relation).is_none() {
            return Err(KnowledgeError::UnknownRelation {
                relation: tuple.relation,
                line: None,
            });
        }
        if text::normalize(&tuple.subject).is_empty() || tuple.object.trim().is_empty() {
            return Err(KnowledgeError::InvalidQuery(
                "tuple subject and object must be non-empty".into(),
            ));
        }
        if !tuple.score.is_finite() {
            return Err(KnowledgeError::InvalidQuery("tuple score must be finite".into()));
        }
        let key = (tuple.relation, text::normalize(&tuple.subject));
        let beam = self.beams.entry(key).or_default();
        let object = tuple.object.trim();
        // a beam holds each object once, at its best score
        if let Some(existing) = beam.iter_mut().find(|e| e.text == object) {
            existing.score = existing.score.max(tuple.score);
        } else {
            beam.push(BeamEntry {
                text: object.to_owned(),
                score: tuple.score,
            });
            self.tuple_count += 1;
        }
        beam.sort_by(beam_order);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tuple_count
    }

    pub fn is_empty(&self) -> bool {
        self.tuple_count == 0
    }

    /// Every stored tuple, in a stable order.
    pub fn tuples(&self) -> Vec<KnowledgeTuple> {
        let mut keys: Vec<_> = self.beams.keys().collect();
        keys.sort();
        keys.into_iter()
            .flat_map(|key| {
                self.beams[key].iter().map(move |e| KnowledgeTuple {
                    subject: key.1.clone(),
                    relation: key.0.clone(),
                    object: e.text.clone(),
                    score: e.score,
                })
            })
            .collect()
    }
}

impl KnowledgeSource for StaticTupleStore {
    fn registry(&self) -> &RelationRegistry {
        &self.registry
    }

    fn query(&self, relation: &str, subject: &str, beam: usize) -> Result<BeamResult, KnowledgeError> {
        check_query(&self.registry, relation, subject, beam)?;
        let key = (relation.to_owned(), text::normalize(subject));
        let objects = self
            .beams
            .get(&key)
            .map(|entries| entries.iter().take(beam).cloned().collect())
            .unwrap_or_default();
        Ok(BeamResult {
            objects,
            beam_size: beam,
        })
    }
}

/// Parses `subject<TAB>relation<TAB>object<TAB>score` records; `#` starts a
/// comment line.
pub fn parse_static_kb(content: &str, registry: RelationRegistry) -> Result<StaticTupleStore, KnowledgeError> {
    let mut store = StaticTupleStore::new(registry);
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(KnowledgeError::Parse {
                line: line_no,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let score: f64 = fields[3].trim().parse().map_err(|e| KnowledgeError::Parse {
            line: line_no,
            message: format!("bad score `{}`: {e}", fields[3].trim()),
        })?;
        if !score.is_finite() {
            return Err(KnowledgeError::Parse {
                line: line_no,
                message: "score must be finite".into(),
            });
        }
        let relation = fields[1].trim();
        if store.registry.get(relation).is_none() {
            return Err(KnowledgeError::UnknownRelation {
                relation: relation.to_owned(),
                line: Some(line_no),
            });
        }
        if text::normalize(fields[0]).is_empty() || fields[2].trim().is_empty() {
            return Err(KnowledgeError::Parse {
                line: line_no,
                message: "subject and object must be non-empty".into(),
            });
        }
        store.insert(KnowledgeTuple {
            subject: fields[0].trim().to_owned(),
            relation: relation.to_owned(),
            object: fields[2].trim().to_owned(),
            score,
        })?;
    }
    Ok(store)
}

pub fn load_static_kb(path: impl AsRef<Path>, registry: RelationRegistry) -> Result<StaticTupleStore, KnowledgeError> {
    parse_static_kb(&std::fs::read_to_string(path)?, registry)
}
