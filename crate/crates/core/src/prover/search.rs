use std::cmp::Ordering;

use super::{rank_order, Hop, HopSide, ProofChain, Prover, ProverError};
use crate::embeddings::PhraseCache;

#[derive(Debug, Clone)]
struct Path {
    hops: Vec<Hop>,
    tail: String,
}

impl Path {
    fn root(phrase: &str) -> Self {
        Self {
            hops: Vec::new(),
            tail: phrase.to_owned(),
        }
    }

    fn extend(&self, hop: Hop) -> Self {
        let tail = hop.object.clone();
        let mut hops = self.hops.clone();
        hops.push(hop);
        Self { hops, tail }
    }

    fn text(&self) -> String {
        self.hops.iter().map(Hop::to_string).collect::<Vec<_>>().join(" -> ")
    }
}

fn by_closeness_then_text(a: &(Path, f64), b: &(Path, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.text().cmp(&b.0.text()))
}

fn children(
    prover: &Prover<'_>,
    relations: &[String],
    side: HopSide,
    parents: &[Path],
) -> Result<Vec<Path>, ProverError> {
    let mut out = Vec::new();
    for parent in parents {
        for relation in relations {
            let beam = prover.source.query(relation, &parent.tail, prover.config.kb_beam)?;
            for entry in beam.objects {
                out.push(parent.extend(Hop {
                    subject: parent.tail.clone(),
                    relation: relation.clone(),
                    object: entry.text,
                    generation_score: entry.score,
                    side,
                }));
            }
        }
    }
    Ok(out)
}

/// Breadth-first walk from `body`; stops at the first depth with a chain
/// whose last object is within `tau` of `head`.
pub(super) fn unidirectional(prover: &Prover<'_>, body: &str, head: &str) -> Result<Vec<ProofChain>, ProverError> {
    let config = prover.config;
    let relations = prover.relations_for(HopSide::Forward);
    let mut cache = PhraseCache::new(prover.embeddings);
    let mut frontier = vec![Path::root(body)];
    for depth in 1..=config.max_hops {
        let level: Vec<(Path, f64)> = children(prover, &relations, HopSide::Forward, &frontier)?
            .into_iter()
            .map(|p| {
                let c = cache.closeness(&p.tail, head);
                (p, c)
            })
            .collect();
        let mut chains: Vec<ProofChain> = level
            .iter()
            .filter(|(_, c)| *c >= config.tau)
            .map(|(p, c)| ProofChain::new(p.hops.clone(), 1.0, *c, None))
            .collect();
        if !chains.is_empty() {
            chains.sort_by(rank_order);
            return Ok(chains);
        }
        if depth == config.max_hops || level.is_empty() {
            break;
        }
        frontier = prune(level, config.search_beam);
    }
    Ok(Vec::new())
}

fn prune(mut level: Vec<(Path, f64)>, keep: usize) -> Vec<Path> {
    if level.len() > keep {
        level.sort_by(by_closeness_then_text);
        level.truncate(keep);
    }
    level.into_iter().map(|(p, _)| p).collect()
}

struct Side {
    side: HopSide,
    relations: Vec<String>,
    levels: Vec<Vec<Path>>,
}

impl Side {
    fn new(prover: &Prover<'_>, side: HopSide, root: &str) -> Self {
        Self {
            side,
            relations: prover.relations_for(side),
            levels: vec![vec![Path::root(root)]],
        }
    }

    fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    fn tails(&self) -> Vec<String> {
        self.levels.iter().flatten().map(|p| p.tail.clone()).collect()
    }

    /// Grows one level, expanding only the `K` deepest nodes that come
    /// closest to anything the opposite side has reached.
    fn expand(
        &mut self,
        prover: &Prover<'_>,
        opposite: &[String],
        cache: &mut PhraseCache<'_>,
    ) -> Result<(), ProverError> {
        let deepest = self.levels.last().expect("root level");
        let parents: Vec<Path> = if deepest.len() > prover.config.search_beam {
            let ranked: Vec<(Path, f64)> = deepest
                .iter()
                .map(|p| {
                    let best = opposite
                        .iter()
                        .map(|o| cache.closeness(&p.tail, o))
                        .fold(f64::NEG_INFINITY, f64::max);
                    (p.clone(), best)
                })
                .collect();
            prune(ranked, prover.config.search_beam)
        } else {
            deepest.clone()
        };
        let next = children(prover, &self.relations, self.side, &parents)?;
        self.levels.push(next);
        Ok(())
    }
}

/// Alternating forward/backward expansion; stops at the shortest total hop
/// count at which some forward and backward node come within `tau`.
pub(super) fn bidirectional(prover: &Prover<'_>, body: &str, head: &str) -> Result<Vec<ProofChain>, ProverError> {
    let config = prover.config;
    let mut cache = PhraseCache::new(prover.embeddings);
    let mut forward = Side::new(prover, HopSide::Forward, body);
    let mut backward = Side::new(prover, HopSide::Backward, head);
    for total in 2..=config.max_hops {
        while forward.depth() < total - 1 {
            let opposite = backward.tails();
            forward.expand(prover, &opposite, &mut cache)?;
        }
        while backward.depth() < total - 1 {
            let opposite = forward.tails();
            backward.expand(prover, &opposite, &mut cache)?;
        }
        let mut chains = Vec::new();
        for f in 1..total {
            let g = total - f;
            for a in &forward.levels[f] {
                for b in &backward.levels[g] {
                    let c = cache.closeness(&a.tail, &b.tail);
                    if c >= config.tau {
                        let mut hops = a.hops.clone();
                        hops.extend(b.hops.iter().rev().cloned());
                        chains.push(ProofChain::new(hops, c, 1.0, Some(f)));
                    }
                }
            }
        }
        if !chains.is_empty() {
            chains.sort_by(rank_order);
            return Ok(chains);
        }
    }
    Ok(Vec::new())
}
