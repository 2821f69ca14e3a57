#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use presume::embeddings::EmbeddingTable;
use presume::engine::Engine;
use presume::kbase::KnowledgeBase;
use presume::knowledge::{
    default_registry, load_static_kb, Direction, KnowledgeGraph, KnowledgeTuple, Relation, RelationRegistry,
    StaticTupleStore,
};
use presume::prover::{SearchConfig, Strategy, TemplateSet, UNBOUNDED};

pub fn data(file: &str) -> std::path::PathBuf {
    presume::engine::data_dir().join(file)
}

pub fn desk_embeddings() -> EmbeddingTable {
    EmbeddingTable::load(data("embeddings.txt")).expect("bundled embeddings")
}

pub fn desk_store() -> StaticTupleStore {
    load_static_kb(data("desk_store.tsv"), default_registry()).expect("bundled store")
}

pub fn engine_with(store: StaticTupleStore, embeddings: EmbeddingTable, kb: KnowledgeBase) -> Engine {
    Engine::new(
        Box::new(store),
        embeddings,
        TemplateSet::default(),
        SearchConfig::default(),
        kb,
    )
    .expect("valid engine")
}

pub fn desk_engine() -> Arc<Engine> {
    Arc::new(engine_with(desk_store(), desk_embeddings(), KnowledgeBase::in_memory()))
}

/// Cosine of token-averaged vectors, written out independently of the crate.
pub struct Oracle<'a> {
    vectors: &'a HashMap<String, Vec<f64>>,
}

impl<'a> Oracle<'a> {
    pub fn new(vectors: &'a HashMap<String, Vec<f64>>) -> Self {
        Self { vectors }
    }

    fn mean(&self, phrase: &str) -> Option<Vec<f64>> {
        let words: Vec<&Vec<f64>> = phrase
            .split_whitespace()
            .filter_map(|w| self.vectors.get(&w.to_lowercase()))
            .collect();
        let first = words.first()?;
        let mut out = vec![0.0; first.len()];
        for v in &words {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += x;
            }
        }
        Some(out.into_iter().map(|x| x / words.len() as f64).collect())
    }

    pub fn closeness(&self, a: &str, b: &str) -> f64 {
        let (Some(x), Some(y)) = (self.mean(a), self.mean(b)) else {
            return 0.0;
        };
        let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        let nx: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|q| q * q).sum::<f64>().sqrt();
        if nx == 0.0 || ny == 0.0 {
            0.0
        } else {
            (dot / (nx * ny)).clamp(-1.0, 1.0)
        }
    }
}

/// A random store small enough to enumerate exhaustively.
pub struct RandomCase {
    pub relations: Vec<(String, Direction)>,
    pub tuples: Vec<(String, String, String)>,
    pub vectors: HashMap<String, Vec<f64>>,
    pub body: String,
    pub head: String,
    pub tau: f64,
}

const WORDS: &[&str] = &[
    "rain", "snow", "late", "early", "coat", "warm", "cold", "work", "home", "bus", "meet", "alarm", "dry", "wet",
];

impl RandomCase {
    pub fn generate(seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let dim = 5;
        let vectors: HashMap<String, Vec<f64>> = WORDS
            .iter()
            .map(|w| (w.to_string(), (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let node_count = rng.random_range(6..=20);
        let mut nodes: Vec<String> = Vec::new();
        while nodes.len() < node_count {
            let len = rng.random_range(1..=3);
            let phrase: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            let phrase = phrase.join(" ");
            if !nodes.contains(&phrase) {
                nodes.push(phrase);
            }
        }
        let rel_count = rng.random_range(2..=8);
        let relations: Vec<(String, Direction)> = (0..rel_count)
            .map(|i| {
                let direction = match i {
                    0 => Direction::PostEffect,
                    1 => Direction::PreCondition,
                    _ => match rng.random_range(0..5) {
                        0 => Direction::Negation,
                        1 | 2 => Direction::PreCondition,
                        _ => Direction::PostEffect,
                    },
                };
                (format!("R{i}"), direction)
            })
            .collect();
        let tuple_target = rng.random_range(1..=200);
        let mut tuples = Vec::new();
        for _ in 0..tuple_target * 3 {
            if tuples.len() == tuple_target {
                break;
            }
            let t = (
                nodes[rng.random_range(0..nodes.len())].clone(),
                relations[rng.random_range(0..relations.len())].0.clone(),
                nodes[rng.random_range(0..nodes.len())].clone(),
            );
            if !tuples.contains(&t) {
                tuples.push(t);
            }
        }
        let body = nodes[rng.random_range(0..nodes.len())].clone();
        let head = nodes[rng.random_range(0..nodes.len())].clone();
        let tau = [0.5, 0.7, 0.8, 0.9, 0.95][rng.random_range(0..5)];
        Self {
            relations,
            tuples,
            vectors,
            body,
            head,
            tau,
        }
    }

    pub fn registry(&self) -> RelationRegistry {
        RelationRegistry::new(
            self.relations
                .iter()
                .map(|(id, d)| Relation::new(id, &id.to_lowercase(), *d, KnowledgeGraph::Custom))
                .collect(),
        )
        .expect("valid registry")
    }

    pub fn store(&self) -> StaticTupleStore {
        StaticTupleStore::from_tuples(
            self.registry(),
            self.tuples.iter().enumerate().map(|(i, (s, r, o))| KnowledgeTuple {
                subject: s.clone(),
                relation: r.clone(),
                object: o.clone(),
                score: -(i as f64) / 100.0,
            }),
        )
        .expect("valid store")
    }

    pub fn embeddings(&self) -> EmbeddingTable {
        EmbeddingTable::from_entries(self.vectors.iter().map(|(k, v)| (k.clone(), v.clone())))
    }

    pub fn config(&self, strategy: Strategy, hops: usize, tau: f64) -> SearchConfig {
        SearchConfig {
            strategy,
            max_hops: hops,
            search_beam: UNBOUNDED,
            kb_beam: UNBOUNDED,
            tau,
            ..SearchConfig::default()
        }
    }

    fn edges(&self, subject: &str, direction: Direction) -> Vec<(String, String, String)> {
        self.tuples
            .iter()
            .filter(|(s, r, _)| s == subject && self.relations.iter().any(|(id, d)| id == r && *d == direction))
            .cloned()
            .collect()
    }

    /// Every directed walk of exactly `len` hops from `root`.
    fn walks(&self, root: &str, len: usize, direction: Direction) -> Vec<Vec<(String, String, String)>> {
        if len == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for edge in self.edges(root, direction) {
            for mut rest in self.walks(&edge.2, len - 1, direction) {
                rest.insert(0, edge.clone());
                out.push(rest);
            }
        }
        out
    }

    /// Chains a unidirectional search must return, as (text, score).
    pub fn oracle_unidirectional(&self, hops: usize, tau: f64) -> Vec<(String, f64)> {
        let oracle = Oracle::new(&self.vectors);
        for n in 1..=hops {
            let found: Vec<(String, f64)> = self
                .walks(&self.body, n, Direction::PostEffect)
                .into_iter()
                .filter_map(|walk| {
                    let c = oracle.closeness(&walk.last().unwrap().2, &self.head);
                    (c >= tau).then(|| (chain_text(&walk), c.min(1.0)))
                })
                .collect();
            if !found.is_empty() {
                return sorted(found);
            }
        }
        Vec::new()
    }

    /// Chains a bidirectional search must return, as (text, score).
    pub fn oracle_bidirectional(&self, hops: usize, tau: f64) -> Vec<(String, f64)> {
        let oracle = Oracle::new(&self.vectors);
        for total in 2..=hops {
            let mut found = Vec::new();
            for f in 1..total {
                let g = total - f;
                for fw in self.walks(&self.body, f, Direction::PostEffect) {
                    for bw in self.walks(&self.head, g, Direction::PreCondition) {
                        let c = oracle.closeness(&fw.last().unwrap().2, &bw.last().unwrap().2);
                        if c >= tau {
                            let mut hops = fw.clone();
                            hops.extend(bw.iter().rev().cloned());
                            found.push((chain_text(&hops), c.min(1.0)));
                        }
                    }
                }
            }
            if !found.is_empty() {
                return sorted(found);
            }
        }
        Vec::new()
    }
}

pub fn chain_text(hops: &[(String, String, String)]) -> String {
    hops.iter()
        .map(|(s, r, o)| format!("({s}, {r}, {o})"))
        .collect::<Vec<_>>()
        .join(" -> ")
}

pub fn sorted(mut chains: Vec<(String, f64)>) -> Vec<(String, f64)> {
    chains.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    chains
}

/// Multiset equality on text with scores within `eps`.
pub fn same_chains(a: &[(String, f64)], b: &[(String, f64)], eps: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= eps)
}
