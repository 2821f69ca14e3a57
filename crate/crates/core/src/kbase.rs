//! Append-only store of learned if-then rules.
//!
//! Journal records are UTF-8 lines of five tab-separated fields:
//! `sequence  provenance  session-id-or-"-"  condition  consequence`.
//! The in-memory rule list always equals a replay of the journal.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{EmbeddingTable, PhraseCache};
use crate::parser::Clause;
use crate::text::single_line;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("journal line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rule clauses must be non-empty")]
    EmptyClause,
    #[error("journal storage failure: {0}")]
    StorageFailure(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Seed,
    UserContributed,
    GeneratorConfirmed,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Seed => "seed",
            Provenance::UserContributed => "user",
            Provenance::GeneratorConfirmed => "generator",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "seed" => Some(Provenance::Seed),
            "user" => Some(Provenance::UserContributed),
            "generator" => Some(Provenance::GeneratorConfirmed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedRule {
    pub condition: Clause,
    pub consequence: Clause,
    pub provenance: Provenance,
    pub session_id: Option<String>,
    pub sequence_number: u64,
}

impl LearnedRule {
    fn to_record(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\n",
            self.sequence_number,
            self.provenance.as_str(),
            self.session_id.as_deref().unwrap_or("-"),
            self.condition.text,
            self.consequence.text
        )
    }

    fn from_record(line: &str, line_no: usize) -> Result<Self, KbError> {
        let err = |message: String| KbError::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let sequence_number = fields[0]
            .parse::<u64>()
            .map_err(|e| err(format!("bad sequence number `{}`: {e}", fields[0])))?;
        let provenance = Provenance::parse(fields[1]).ok_or_else(|| err(format!("bad provenance `{}`", fields[1])))?;
        let session_id = (fields[2] != "-").then(|| fields[2].to_owned());
        let condition = Clause::from_text(fields[3]).ok_or_else(|| err("empty condition".into()))?;
        let consequence = Clause::from_text(fields[4]).ok_or_else(|| err("empty consequence".into()))?;
        Ok(Self {
            condition,
            consequence,
            provenance,
            session_id,
            sequence_number,
        })
    }
}

/// A consulted rule and the weaker of its two closeness gates.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleMatch {
    pub rule: LearnedRule,
    pub closeness: f64,
}

#[derive(Debug)]
pub struct KnowledgeBase {
    rules: Vec<LearnedRule>,
    journal: Option<(PathBuf, File)>,
}

impl KnowledgeBase {
    /// A store without a journal; additions live only in memory.
    pub fn in_memory() -> Self {
        Self {
            rules: Vec::new(),
            journal: None,
        }
    }

    /// Opens (creating if needed) and replays a journal. A partial trailing
    /// record is cut off with a warning; corruption anywhere else is an error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let path = path.as_ref();
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut content = String::new();
        file.read_to_string(&mut content)?;
        let (rules, valid_len) = replay(&content)?;
        if valid_len < content.len() {
            warn!(
                "truncating partial trailing record in {} ({} bytes)",
                path.display(),
                content.len() - valid_len
            );
            file.set_len(valid_len as u64)?;
            file.seek(SeekFrom::End(0))?;
            file.sync_data()?;
        }
        Ok(Self {
            rules,
            journal: Some((path.to_owned(), file)),
        })
    }

    /// Replays journal text into an in-memory store.
    pub fn from_journal_text(content: &str) -> Result<Self, KbError> {
        let (rules, _) = replay(content)?;
        Ok(Self { rules, journal: None })
    }

    /// Copies the rules into a store with no journal attached.
    pub fn fork_in_memory(&self) -> Self {
        Self {
            rules: self.rules.clone(),
            journal: None,
        }
    }

    pub fn journal_path(&self) -> Option<&Path> {
        self.journal.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn rules(&self) -> &[LearnedRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, sequence_number: u64) -> Option<&LearnedRule> {
        self.rules.iter().find(|r| r.sequence_number == sequence_number)
    }

    /// Appends a rule; the journal is synced before the rule becomes visible.
    pub fn add_rule(
        &mut self,
        condition: &str,
        consequence: &str,
        provenance: Provenance,
        session_id: Option<&str>,
    ) -> Result<&LearnedRule, KbError> {
        let condition = Clause::from_text(&single_line(condition)).ok_or(KbError::EmptyClause)?;
        let consequence = Clause::from_text(&single_line(consequence)).ok_or(KbError::EmptyClause)?;
        let rule = LearnedRule {
            condition,
            consequence,
            provenance,
            session_id: session_id.map(single_line).filter(|s| !s.is_empty() && s != "-"),
            sequence_number: self.rules.last().map_or(1, |r| r.sequence_number + 1),
        };
        if let Some((_, file)) = self.journal.as_mut() {
            file.write_all(rule.to_record().as_bytes())?;
            file.sync_data()?;
        }
        self.rules.push(rule);
        Ok(self.rules.last().expect("just pushed"))
    }

    /// Rules whose condition is close to `body` and consequence close to
    /// `head`, best first.
    pub fn consult(&self, body: &str, head: &str, tau: f64, embeddings: &EmbeddingTable) -> Vec<RuleMatch> {
        let mut cache = PhraseCache::new(embeddings);
        let mut hits: Vec<RuleMatch> = self
            .rules
            .iter()
            .filter_map(|rule| {
                let c = cache.closeness(&rule.condition.text, body);
                if c < tau {
                    return None;
                }
                let h = cache.closeness(&rule.consequence.text, head);
                (h >= tau).then(|| RuleMatch {
                    rule: rule.clone(),
                    closeness: c.min(h),
                })
            })
            .collect();
        hits.sort_by(|a, b| {
            b.closeness
                .partial_cmp(&a.closeness)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.rule.sequence_number.cmp(&b.rule.sequence_number))
        });
        hits
    }
}

/// Parses complete records; returns the rules and the byte length of the
/// valid prefix.
fn replay(content: &str) -> Result<(Vec<LearnedRule>, usize), KbError> {
    let mut rules: Vec<LearnedRule> = Vec::new();
    let mut offset = 0;
    let records: Vec<&str> = content.split_inclusive('\n').collect();
    for (idx, record) in records.iter().enumerate() {
        let line_no = idx + 1;
        let is_last = idx + 1 == records.len();
        let complete = record.ends_with('\n');
        let line = record.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            offset += record.len();
            continue;
        }
        let parsed = LearnedRule::from_record(line, line_no).and_then(|rule| match rules.last() {
            Some(prev) if rule.sequence_number <= prev.sequence_number => Err(KbError::Parse {
                line: line_no,
                message: format!(
                    "sequence {} does not follow {}",
                    rule.sequence_number, prev.sequence_number
                ),
            }),
            _ => Ok(rule),
        });
        match parsed {
            Ok(rule) if complete => {
                rules.push(rule);
                offset += record.len();
            }
            // unterminated or unparseable final record: an interrupted append
            Ok(_) | Err(_) if is_last && !complete => return Ok((rules, offset)),
            Ok(_) => unreachable!("only the last record can lack a newline"),
            Err(e) => return Err(e),
        }
    }
    Ok((rules, offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_entries([
            ("rain", vec![1.0, 0.0, 0.0]),
            ("wet", vec![0.0, 1.0, 0.0]),
            ("sun", vec![0.0, 0.0, 1.0]),
        ])
    }

    #[test]
    fn empty_file_gives_empty_kb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        std::fs::write(&path, "").unwrap();
        assert!(KnowledgeBase::load(&path).unwrap().is_empty());
    }

    #[test]
    fn missing_file_is_created() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("new.tsv");
        let kb = KnowledgeBase::load(&path).unwrap();
        assert!(kb.is_empty());
        assert!(path.exists());
    }

    #[test]
    fn appends_replay_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        let mut kb = KnowledgeBase::load(&path).unwrap();
        kb.add_rule("it rains", "the ground is wet", Provenance::Seed, None)
            .unwrap();
        kb.add_rule(
            "it is sunny",
            "I wear sunglasses",
            Provenance::UserContributed,
            Some("s1"),
        )
        .unwrap();
        kb.add_rule("I am cold", "wear jacket", Provenance::GeneratorConfirmed, Some("s1"))
            .unwrap();
        drop(kb);
        let kb = KnowledgeBase::load(&path).unwrap();
        assert_eq!(kb.len(), 3);
        let seqs: Vec<u64> = kb.rules().iter().map(|r| r.sequence_number).collect();
        assert_eq!(seqs, vec![1, 2, 3]);
        assert_eq!(kb.rules()[1].session_id.as_deref(), Some("s1"));
        assert_eq!(kb.rules()[2].provenance, Provenance::GeneratorConfirmed);
    }

    #[test]
    fn duplicates_are_kept() {
        let mut kb = KnowledgeBase::in_memory();
        kb.add_rule("it rains", "wet", Provenance::Seed, None).unwrap();
        kb.add_rule("it rains", "wet", Provenance::UserContributed, None)
            .unwrap();
        assert_eq!(kb.len(), 2);
    }

    #[test]
    fn reload_equals_memory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        let mut kb = KnowledgeBase::load(&path).unwrap();
        kb.add_rule("a\tb", "c\nd", Provenance::UserContributed, Some("x"))
            .unwrap();
        let reloaded = KnowledgeBase::load(&path).unwrap();
        assert_eq!(kb.rules(), reloaded.rules());
        assert_eq!(reloaded.rules()[0].condition.text, "a b");
    }

    #[test]
    fn partial_trailing_record_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        std::fs::write(&path, "1\tseed\t-\train\twet\n2\tuser\t-\tsun").unwrap();
        let mut kb = KnowledgeBase::load(&path).unwrap();
        assert_eq!(kb.len(), 1);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "1\tseed\t-\train\twet\n");
        kb.add_rule("sun", "warm", Provenance::Seed, None).unwrap();
        let kb = KnowledgeBase::load(&path).unwrap();
        assert_eq!(kb.len(), 2);
        assert_eq!(kb.rules()[1].sequence_number, 2);
    }

    #[test]
    fn corruption_before_the_end_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.tsv");
        std::fs::write(&path, "1\tseed\t-\train\twet\ngarbage\n3\tseed\t-\tsun\twarm\n").unwrap();
        assert!(matches!(
            KnowledgeBase::load(&path),
            Err(KbError::Parse { line: 2, .. })
        ));
        std::fs::write(&path, "2\tseed\t-\train\twet\n1\tseed\t-\tsun\twarm\n").unwrap();
        assert!(matches!(
            KnowledgeBase::load(&path),
            Err(KbError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_clause_rejected() {
        let mut kb = KnowledgeBase::in_memory();
        assert!(matches!(
            kb.add_rule(" ", "x", Provenance::Seed, None),
            Err(KbError::EmptyClause)
        ));
    }

    #[test]
    fn consult_gates() {
        let t = table();
        let mut kb = KnowledgeBase::in_memory();
        assert!(kb.consult("rain", "wet", 0.8, &t).is_empty());
        kb.add_rule("rain", "wet", Provenance::Seed, None).unwrap();
        kb.add_rule("rain", "sun", Provenance::Seed, None).unwrap();
        let hits = kb.consult("rain", "wet", 0.8, &t);
        assert_eq!(hits.len(), 1);
        assert!((hits[0].closeness - 1.0).abs() < 1e-12);
        assert_eq!(hits[0].rule.sequence_number, 1);
        // condition matches, consequence does not
        assert!(kb.consult("rain", "rain", 0.8, &t).is_empty());
    }
}
