//! Multi-hop proof search over a [`KnowledgeSource`].
//!
//! An implication `head :- body` is proved by a chain of tuples leading
//! from the body clause to the head clause. Unidirectional search walks
//! forward from the body through post-effect relations; bidirectional
//! search also walks backward from the head through pre-condition
//! relations and succeeds where the two frontiers come semantically close.
//! Learned rules are consulted before any generative query is made.

mod search;
mod template;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingTable;
use crate::kbase::{KnowledgeBase, RuleMatch};
use crate::knowledge::{beam_order, BeamEntry, Direction, KnowledgeError, KnowledgeSource};
use crate::parser::Command;
use crate::text;

pub use template::{
    fill_question, resolve_clause, ClauseRole, ImplicationSpec, QuestionForm, ResolutionContext, TemplateColor,
    TemplateSet, TemplateSpec,
};

/// Number of candidates shown to the user.
pub const TOP_K: usize = 5;

/// Beam widths set to this value are unbounded.
pub const UNBOUNDED: usize = usize::MAX;

/// Relation id recorded on hops that come from a learned rule.
pub const RULE_RELATION: &str = "LearnedRule";

#[derive(Debug, Error)]
pub enum ProverError {
    #[error("role {0:?} cannot be resolved for this command")]
    UnresolvableRole(ClauseRole),
    #[error("unsupported template `{0}`")]
    UnsupportedTemplate(String),
    #[error("template {color} has no `{form:?}` question")]
    MissingQuestionForm { color: TemplateColor, form: QuestionForm },
    #[error("invalid template configuration: {0}")]
    InvalidTemplate(String),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("the relation registry has no negation relation")]
    NoNegationRelation,
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Unidirectional,
    Bidirectional,
}

/// Which relations each search side may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationPolicy {
    /// Forward hops use post-effect relations, backward hops pre-condition
    /// relations.
    Directional,
    /// Both sides use every non-negation relation.
    AnyRelation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Hop budget `N_max`.
    pub max_hops: usize,
    /// Frontier branches kept per level (`K`).
    pub search_beam: usize,
    /// Objects requested per knowledge query (`b`).
    pub kb_beam: usize,
    /// Closeness threshold `tau`.
    pub tau: f64,
    /// Threshold both clauses of a learned rule must reach to stand in
    /// for a search.
    pub consult_tau: f64,
    pub relation_policy: RelationPolicy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Bidirectional,
            max_hops: 3,
            search_beam: 5,
            kb_beam: crate::knowledge::DEFAULT_KB_BEAM,
            tau: 0.8,
            consult_tau: 0.95,
            relation_policy: RelationPolicy::Directional,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ProverError> {
        let fail = |m: &str| Err(ProverError::InvalidConfig(m.to_owned()));
        if !(1..=5).contains(&self.max_hops) {
            return fail("hop budget must be in [1, 5]");
        }
        if self.strategy == Strategy::Bidirectional && self.max_hops < 2 {
            return fail("bidirectional search needs a hop budget of at least 2");
        }
        if self.search_beam == 0 || self.kb_beam == 0 {
            return fail("beam widths must be at least 1");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("closeness threshold must be in (0, 1]");
        }
        if !(self.consult_tau > 0.0 && self.consult_tau <= 1.0) {
            return fail("consult threshold must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HopSide {
    /// Queried from the body side.
    Forward,
    /// Queried from the head side.
    Backward,
    /// Taken from a learned rule.
    Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub generation_score: f64,
    pub side: HopSide,
}

impl Hop {
    /// `(body, head)` of the rule this hop encodes.
    pub fn as_rule(&self) -> (&str, &str) {
        match self.side {
            HopSide::Forward | HopSide::Rule => (&self.subject, &self.object),
            HopSide::Backward => (&self.object, &self.subject),
        }
    }
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.relation, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChain {
    pub hops: Vec<Hop>,
    /// Closeness where the two frontiers meet; 1.0 for chains linked verbatim.
    pub junction_closeness: f64,
    /// Closeness of the final object to the head; 1.0 when the chain ends in
    /// the head clause itself.
    pub terminal_closeness: f64,
    pub score: f64,
    /// Index of the first backward hop in a bidirectional chain.
    pub meets_at: Option<usize>,
    /// Sequence number of the learned rule behind a rule-backed chain.
    pub rule: Option<u64>,
}

impl ProofChain {
    pub(crate) fn new(hops: Vec<Hop>, junction: f64, terminal: f64, meets_at: Option<usize>) -> Self {
        Self {
            hops,
            junction_closeness: junction,
            terminal_closeness: terminal,
            score: junction.min(terminal),
            meets_at,
            rule: None,
        }
    }

    fn from_rule(hit: &RuleMatch) -> Self {
        let hop = Hop {
            subject: hit.rule.condition.text.clone(),
            relation: RULE_RELATION.to_owned(),
            object: hit.rule.consequence.text.clone(),
            generation_score: 1.0,
            side: HopSide::Rule,
        };
        Self {
            rule: Some(hit.rule.sequence_number),
            ..Self::new(vec![hop], hit.closeness, 1.0, None)
        }
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    pub fn text(&self) -> String {
        self.hops.iter().map(Hop::to_string).collect::<Vec<_>>().join(" -> ")
    }

    /// Intermediate phrases of the chain, for presenting it as an option.
    pub fn bridge_text(&self) -> String {
        let mut nodes: Vec<&str> = Vec::new();
        match self.meets_at {
            Some(split) => {
                nodes.extend(self.hops[..split].iter().map(|h| h.object.as_str()));
                if let Some(first_back) = self.hops.get(split) {
                    nodes.push(&first_back.object);
                }
                nodes.extend(self.hops[split..].iter().map(|h| h.subject.as_str()));
                // the last backward subject is the head clause itself
                nodes.pop();
            }
            None => nodes.extend(self.hops.iter().map(|h| h.object.as_str())),
        }
        let mut out: Vec<&str> = Vec::new();
        for node in nodes {
            if out
                .last()
                .is_none_or(|last| text::normalize(last) != text::normalize(node))
            {
                out.push(node);
            }
        }
        out.join(", then ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullProof {
    pub color: TemplateColor,
    pub first: ProofChain,
    pub second: ProofChain,
    pub combined_score: f64,
}

impl FullProof {
    pub fn uses_rule(&self, seq: u64) -> bool {
        self.first.rule == Some(seq) || self.second.rule == Some(seq)
    }

    pub fn chain(&self, index: usize) -> &ProofChain {
        if index == 0 {
            &self.first
        } else {
            &self.second
        }
    }

    /// Text shown for this proof when offered as an option.
    pub fn option_text(&self, focus: usize) -> String {
        self.chain(focus).bridge_text()
    }
}

/// Anything ranked by score, then hop count, then text.
pub trait Ranked {
    fn rank_score(&self) -> f64;
    fn rank_hops(&self) -> usize;
    fn rank_text(&self) -> String;
}

impl Ranked for ProofChain {
    fn rank_score(&self) -> f64 {
        self.score
    }
    fn rank_hops(&self) -> usize {
        self.hops.len()
    }
    fn rank_text(&self) -> String {
        self.text()
    }
}

impl Ranked for FullProof {
    fn rank_score(&self) -> f64 {
        self.combined_score
    }
    fn rank_hops(&self) -> usize {
        self.first.hops.len() + self.second.hops.len()
    }
    fn rank_text(&self) -> String {
        format!("{} && {}", self.first.text(), self.second.text())
    }
}

pub fn rank_order<T: Ranked>(a: &T, b: &T) -> Ordering {
    b.rank_score()
        .partial_cmp(&a.rank_score())
        .unwrap_or(Ordering::Equal)
        .then(a.rank_hops().cmp(&b.rank_hops()))
        .then_with(|| a.rank_text().cmp(&b.rank_text()))
}

/// Stable top-`k` by score, hops and text.
pub fn rank_top_k<T: Ranked>(mut items: Vec<T>, k: usize) -> Vec<T> {
    items.sort_by(rank_order);
    items.truncate(k);
    items
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProofStatus {
    Proved,
    /// Exactly one implication has chains; the index is 0 or 1.
    HalfProofOnly(usize),
    Unproved,
}

/// Result of proving both implications of a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandProofs {
    pub color: TemplateColor,
    /// Ranked chains for each implication.
    pub chains: [Vec<ProofChain>; 2],
    /// Top pairings, best first.
    pub proofs: Vec<FullProof>,
    /// Goal negation used for the first blue implication, if any.
    pub negation: Option<String>,
}

impl CommandProofs {
    pub fn status(&self) -> ProofStatus {
        match (self.chains[0].is_empty(), self.chains[1].is_empty()) {
            (false, false) => ProofStatus::Proved,
            (false, true) => ProofStatus::HalfProofOnly(0),
            (true, false) => ProofStatus::HalfProofOnly(1),
            (true, true) => ProofStatus::Unproved,
        }
    }
}

/// Search engine bound to one knowledge source and embedding table.
#[derive(Clone, Copy)]
pub struct Prover<'a> {
    pub source: &'a dyn KnowledgeSource,
    pub embeddings: &'a EmbeddingTable,
    pub config: SearchConfig,
}

impl<'a> Prover<'a> {
    pub fn new(source: &'a dyn KnowledgeSource, embeddings: &'a EmbeddingTable, config: SearchConfig) -> Self {
        Self {
            source,
            embeddings,
            config,
        }
    }

    fn relations_for(&self, side: HopSide) -> Vec<String> {
        let registry = self.source.registry();
        registry
            .relations()
            .iter()
            .filter(|r| match (self.config.relation_policy, side) {
                (RelationPolicy::AnyRelation, _) => r.direction != Direction::Negation,
                (RelationPolicy::Directional, HopSide::Backward) => r.direction == Direction::PreCondition,
                (RelationPolicy::Directional, _) => r.direction == Direction::PostEffect,
            })
            .map(|r| r.id.clone())
            .collect()
    }

    /// Candidate negations of `goal`, merged over every negation relation.
    pub fn negate_goal(&self, goal: &str) -> Result<Vec<BeamEntry>, ProverError> {
        let registry = self.source.registry();
        let relations: Vec<&str> = registry
            .with_direction(Direction::Negation)
            .map(|r| r.id.as_str())
            .collect();
        if relations.is_empty() {
            return Err(ProverError::NoNegationRelation);
        }
        let mut best: HashMap<String, BeamEntry> = HashMap::new();
        for relation in relations {
            for entry in self.source.query(relation, goal, self.config.kb_beam)?.objects {
                let key = text::normalize(&entry.text);
                match best.get(&key) {
                    Some(existing) if beam_order(existing, &entry) != Ordering::Greater => {}
                    _ => {
                        best.insert(key, entry);
                    }
                }
            }
        }
        let mut merged: Vec<BeamEntry> = best.into_values().collect();
        merged.sort_by(beam_order);
        Ok(merged)
    }

    pub fn unidirectional_search(&self, body: &str, head: &str) -> Result<Vec<ProofChain>, ProverError> {
        search::unidirectional(self, body, head)
    }

    pub fn bidirectional_search(&self, body: &str, head: &str) -> Result<Vec<ProofChain>, ProverError> {
        search::bidirectional(self, body, head)
    }

    /// Dispatches on the configured strategy.
    pub fn search(&self, body: &str, head: &str) -> Result<Vec<ProofChain>, ProverError> {
        self.config.validate()?;
        match self.config.strategy {
            Strategy::Unidirectional => self.unidirectional_search(body, head),
            Strategy::Bidirectional => self.bidirectional_search(body, head),
        }
    }

    /// Proves one implication: learned rules first, generative search otherwise.
    pub fn prove_implication(
        &self,
        implication: &ImplicationSpec,
        command: &Command,
        context: &ResolutionContext,
        kb: &KnowledgeBase,
    ) -> Result<Vec<ProofChain>, ProverError> {
        let body = resolve_clause(implication.body, command, context)?;
        let head = resolve_clause(implication.head, command, context)?;
        let hits = kb.consult(&body.text, &head.text, self.config.consult_tau, self.embeddings);
        let mut chains = if hits.is_empty() {
            self.search(&body.text, &head.text)?
        } else {
            hits.iter().map(ProofChain::from_rule).collect()
        };
        chains.sort_by(rank_order);
        Ok(chains)
    }

    /// Proves both implications of `template` and pairs their chains.
    ///
    /// A template that needs the goal's negation uses the confirmed one from
    /// `context`, or else the top candidate from [`Prover::negate_goal`].
    pub fn prove_command(
        &self,
        template: &TemplateSpec,
        command: &Command,
        context: &ResolutionContext,
        kb: &KnowledgeBase,
    ) -> Result<CommandProofs, ProverError> {
        let mut context = context.clone();
        if template.uses_negation() && context.negated_goal.is_none() {
            context.negated_goal = self.negate_goal(&command.goal.text)?.into_iter().next().map(|e| e.text);
        }
        let mut chains: [Vec<ProofChain>; 2] = [Vec::new(), Vec::new()];
        for (slot, implication) in chains.iter_mut().zip(&template.implications) {
            *slot = match self.prove_implication(implication, command, &context, kb) {
                Ok(found) => found,
                // no negation candidate: that implication is simply unproved
                Err(ProverError::UnresolvableRole(ClauseRole::NegatedGoal)) => Vec::new(),
                Err(e) => return Err(e),
            };
        }
        let mut proofs = Vec::with_capacity(chains[0].len() * chains[1].len());
        for first in &chains[0] {
            for second in &chains[1] {
                proofs.push(FullProof {
                    color: template.color,
                    combined_score: first.score.min(second.score),
                    first: first.clone(),
                    second: second.clone(),
                });
            }
        }
        Ok(CommandProofs {
            color: template.color,
            proofs: rank_top_k(proofs, TOP_K),
            chains,
            negation: context.negated_goal,
        })
    }
}
