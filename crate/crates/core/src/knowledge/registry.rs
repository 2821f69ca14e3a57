use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KnowledgeError;

const DEFAULT_RELATIONS: &str = include_str!("../../data/relations.toml");

/// Which side of a tuple is the rule head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Subject is the body, object is the head.
    PostEffect,
    /// Object is the body, subject is the head.
    PreCondition,
    /// Object is the opposite of the subject.
    Negation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeGraph {
    Atomic,
    ConceptNet,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub id: String,
    pub surface: String,
    pub direction: Direction,
    #[serde(default = "custom_source")]
    pub source: KnowledgeGraph,
}

fn custom_source() -> KnowledgeGraph {
    KnowledgeGraph::Custom
}

impl Relation {
    pub fn new(id: &str, surface: &str, direction: Direction, source: KnowledgeGraph) -> Self {
        Self {
            id: id.to_owned(),
            surface: surface.to_owned(),
            direction,
            source,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    relation: Vec<Relation>,
}

/// Ordered, id-unique set of relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRegistry {
    relations: Vec<Relation>,
    index: HashMap<String, usize>,
}

impl RelationRegistry {
    /// Requires unique ids and at least one post-effect and one
    /// pre-condition relation.
    pub fn new(relations: Vec<Relation>) -> Result<Self, KnowledgeError> {
        let mut index = HashMap::new();
        for (i, r) in relations.iter().enumerate() {
            if r.id.trim().is_empty() || r.id.contains(char::is_whitespace) {
                return Err(KnowledgeError::InvalidRegistry(format!(
                    "invalid relation id `{}`",
                    r.id
                )));
            }
            if index.insert(r.id.clone(), i).is_some() {
                return Err(KnowledgeError::InvalidRegistry(format!(
                    "duplicate relation id `{}`",
                    r.id
                )));
            }
        }
        for needed in [Direction::PostEffect, Direction::PreCondition] {
            if !relations.iter().any(|r| r.direction == needed) {
                return Err(KnowledgeError::InvalidRegistry(format!(
                    "registry needs at least one {needed:?} relation"
                )));
            }
        }
        Ok(Self { relations, index })
    }

    pub fn from_toml(content: &str) -> Result<Self, KnowledgeError> {
        let file: RegistryFile = toml::from_str(content).map_err(|e| KnowledgeError::InvalidRegistry(e.to_string()))?;
        Self::new(file.relation)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KnowledgeError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, id: &str) -> Option<&Relation> {
        self.index.get(id).map(|&i| &self.relations[i])
    }

    pub fn direction(&self, id: &str) -> Option<Direction> {
        self.get(id).map(|r| r.direction)
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Relations of one direction, in registry order.
    pub fn with_direction(&self, direction: Direction) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| r.direction == direction)
    }
}

/// The shipped registry (`data/relations.toml`).
pub fn default_registry() -> RelationRegistry {
    RelationRegistry::from_toml(DEFAULT_RELATIONS).expect("bundled relation registry is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_partition() {
        let reg = default_registry();
        let post = [
            "Causes",
            "CausesDesire",
            "HasSubevent",
            "UsedFor",
            "xEffect",
            "CreatedBy",
            "ReceivesAction",
        ];
        let pre = ["HasPrerequisite", "MotivatedByGoal", "xNeed", "Desires", "CapableOf"];
        for id in post {
            assert_eq!(reg.direction(id), Some(Direction::PostEffect), "{id}");
        }
        for id in pre {
            assert_eq!(reg.direction(id), Some(Direction::PreCondition), "{id}");
        }
        assert_eq!(reg.direction("NotCapableOf"), Some(Direction::Negation));
        assert_eq!(reg.direction("NotIsA"), Some(Direction::Negation));
        assert!(reg.relations().iter().all(|r| !r.surface.is_empty()));
    }

    #[test]
    fn surfaces_from_the_direction_examples() {
        let reg = default_registry();
        let by_surface = |s: &str| reg.relations().iter().find(|r| r.surface == s).map(|r| r.direction);
        assert_eq!(by_surface("Because I wanted"), Some(Direction::PostEffect));
        assert_eq!(by_surface("is used for"), Some(Direction::PostEffect));
        assert_eq!(by_surface("Before I needed"), Some(Direction::PreCondition));
        assert_eq!(by_surface("requires action"), Some(Direction::PreCondition));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = Relation::new("A", "a", Direction::PostEffect, KnowledgeGraph::Custom);
        let err = RelationRegistry::new(vec![r.clone(), r]).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn needs_both_search_directions() {
        let only_post = vec![Relation::new("A", "a", Direction::PostEffect, KnowledgeGraph::Custom)];
        assert!(RelationRegistry::new(only_post).is_err());
    }
}
