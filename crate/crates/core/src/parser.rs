//! Deterministic decomposition of if-then-because commands and if-then
//! explanations into clauses.
//!
//! Markers are matched as whole words, case-insensitively, and only the
//! first occurrence of each marker delimits a clause. Terminal punctuation
//! and a comma before a marker are dropped from clause texts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("command is empty")]
    EmptyCommand,
    #[error("missing state clause (expected `if <state>`)")]
    MissingStateClause,
    #[error("missing action clause (expected `then <action>`)")]
    MissingActionClause,
    #[error("missing goal clause (expected `because <goal>`)")]
    MissingGoalClause,
    #[error("markers must appear in if -> then -> because order")]
    MarkerOrderViolation,
    #[error("explanation is not in `if <condition> then <consequence>` form")]
    NotIfThenFormat,
}

/// Raw user utterance, guaranteed non-empty after trimming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCommand(String);

impl RawCommand {
    pub fn new(text: impl Into<String>) -> Result<Self, ParseError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ParseError::EmptyCommand);
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// One self-contained clause of a command or explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub text: String,
    pub tokens: Vec<String>,
    /// Person-normalized form used when a clause is quoted back to the user.
    pub normalized_text: String,
}

impl Clause {
    /// Builds a clause from already-delimited text. Returns `None` when the
    /// text has no word tokens.
    pub fn from_text(text: &str) -> Option<Self> {
        let text = strip_edges(text);
        let tokens = text::tokens(text);
        if tokens.is_empty() {
            return None;
        }
        Some(Self {
            normalized_text: person_normalize(text),
            text: text.to_owned(),
            tokens,
        })
    }
}

impl std::fmt::Display for Clause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub raw: RawCommand,
    pub state: Clause,
    pub action: Clause,
    pub goal: Clause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserExplanation {
    pub condition: Clause,
    pub consequence: Clause,
    pub raw: String,
}

/// Splits `if <state> then <action> because <goal>`.
pub fn parse_command(raw: &RawCommand) -> Result<Command, ParseError> {
    let text = raw.as_str();
    let if_at = find_marker(text, "if", 0).ok_or(ParseError::MissingStateClause)?;
    let then_at = find_marker(text, "then", 0).ok_or(ParseError::MissingActionClause)?;
    let because_at = find_marker(text, "because", 0).ok_or(ParseError::MissingGoalClause)?;
    if !(if_at.start < then_at.start && then_at.start < because_at.start) {
        return Err(ParseError::MarkerOrderViolation);
    }
    let state = Clause::from_text(&text[if_at.end..then_at.start]).ok_or(ParseError::MissingStateClause)?;
    let action = Clause::from_text(&text[then_at.end..because_at.start]).ok_or(ParseError::MissingActionClause)?;
    let goal = Clause::from_text(&text[because_at.end..]).ok_or(ParseError::MissingGoalClause)?;
    Ok(Command {
        raw: raw.clone(),
        state,
        action,
        goal,
    })
}

/// Convenience wrapper over [`parse_command`] for plain strings.
pub fn parse_command_str(text: &str) -> Result<Command, ParseError> {
    parse_command(&RawCommand::new(text)?)
}

/// Splits `if <condition> then <consequence>`. Conjunctions inside the
/// condition stay in one clause.
pub fn parse_explanation(text: &str) -> Result<UserExplanation, ParseError> {
    let if_at = find_marker(text, "if", 0).ok_or(ParseError::NotIfThenFormat)?;
    let then_at = find_marker(text, "then", if_at.end).ok_or(ParseError::NotIfThenFormat)?;
    let condition = Clause::from_text(&text[if_at.end..then_at.start]).ok_or(ParseError::NotIfThenFormat)?;
    let consequence = Clause::from_text(&text[then_at.end..]).ok_or(ParseError::NotIfThenFormat)?;
    Ok(UserExplanation {
        condition,
        consequence,
        raw: text.to_owned(),
    })
}

struct Span {
    start: usize,
    end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

/// First whole-word, case-insensitive occurrence of `marker` at or after `from`.
fn find_marker(text: &str, marker: &str, from: usize) -> Option<Span> {
    let mut word_start: Option<usize> = None;
    let check = |start: usize, end: usize| -> Option<Span> {
        (start >= from && text[start..end].eq_ignore_ascii_case(marker)).then_some(Span { start, end })
    };
    for (i, c) in text.char_indices() {
        match (is_word_char(c), word_start) {
            (true, None) => word_start = Some(i),
            (false, Some(s)) => {
                if let Some(span) = check(s, i) {
                    return Some(span);
                }
                word_start = None;
            }
            _ => {}
        }
    }
    word_start.and_then(|s| check(s, text.len()))
}

fn strip_edges(text: &str) -> &str {
    text.trim_matches(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | ':' | '.' | '!' | '?'))
}

const PARTICLES: &[&str] = &["up", "down", "out", "off", "in", "on", "back"];
const REQUEST_VERBS: &[&str] = &["remind", "tell", "ask"];

/// Rewrites a clause from the agent's point of view to the user's.
/// "I want to be" becomes "I am" and "I want to" becomes "I"; a leading
/// "remind me to" (or "tell"/"ask") is dropped, and "me" before a verb
/// particle goes too ("wake me up early" -> "wake up early").
pub fn person_normalize(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let mut out: Vec<&str> = Vec::with_capacity(words.len());
    let mut i = 0;
    if lower.len() > 3 && lower[0] == "i" && lower[1] == "want" && lower[2] == "to" {
        out.push(words[0]);
        i = 3;
        if lower[3] == "be" {
            out.push("am");
            i = 4;
        }
    } else if lower.len() > 3 && REQUEST_VERBS.contains(&lower[0].as_str()) && lower[1] == "me" && lower[2] == "to" {
        i = 3;
    }
    let first = i;
    while i < words.len() {
        let before_particle = lower.get(i + 1).is_some_and(|w| PARTICLES.contains(&w.as_str()));
        if i > first && lower[i] == "me" && before_particle {
            i += 1;
            continue;
        }
        out.push(words[i]);
        i += 1;
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meeting_command() {
        let c =
            parse_command_str("If I have an early morning meeting then wake me up early because I want to be on time.")
                .unwrap();
        assert_eq!(c.state.text, "I have an early morning meeting");
        assert_eq!(c.action.text, "wake me up early");
        assert_eq!(c.goal.text, "I want to be on time");
        assert_eq!(c.action.normalized_text, "wake up early");
        assert_eq!(c.goal.normalized_text, "I am on time");
    }

    #[test]
    fn snow_command() {
        let c = parse_command_str("If it snows tonight then wake me up early because I want to get to work on time")
            .unwrap();
        assert_eq!(c.state.text, "it snows tonight");
        assert_eq!(c.action.text, "wake me up early");
        assert_eq!(c.goal.text, "I want to get to work on time");
        assert_eq!(c.goal.normalized_text, "I get to work on time");
    }

    #[test]
    fn missing_markers() {
        assert_eq!(
            parse_command_str("wake me up early"),
            Err(ParseError::MissingStateClause)
        );
        assert_eq!(
            parse_command_str("if it rains remind me"),
            Err(ParseError::MissingActionClause)
        );
        assert_eq!(
            parse_command_str("if it rains then remind me"),
            Err(ParseError::MissingGoalClause)
        );
        assert_eq!(parse_command_str("   "), Err(ParseError::EmptyCommand));
    }

    #[test]
    fn empty_spans_are_missing_clauses() {
        assert_eq!(
            parse_command_str("if then wake me because I want to"),
            Err(ParseError::MissingStateClause)
        );
        assert_eq!(
            parse_command_str("if it rains, then, because I want to stay dry"),
            Err(ParseError::MissingActionClause)
        );
        assert_eq!(
            parse_command_str("if it rains then remind me because."),
            Err(ParseError::MissingGoalClause)
        );
    }

    #[test]
    fn out_of_order_markers() {
        assert_eq!(
            parse_command_str("then remind me if it rains because I want to stay dry"),
            Err(ParseError::MarkerOrderViolation)
        );
        assert_eq!(
            parse_command_str("if I am late because of traffic then call my boss because I care"),
            Err(ParseError::MarkerOrderViolation)
        );
    }

    #[test]
    fn commas_and_case() {
        let c = parse_command_str(
            "IF my calendar is clear today, THEN remind me to go to gym in the afternoon, Because i want to keep myself healthy!",
        )
        .unwrap();
        assert_eq!(c.state.text, "my calendar is clear today");
        assert_eq!(c.action.text, "remind me to go to gym in the afternoon");
        assert_eq!(c.goal.text, "i want to keep myself healthy");
    }

    #[test]
    fn later_markers_stay_in_clause() {
        let c =
            parse_command_str("if it rains then remind me because I want to know if it rains then and there").unwrap();
        assert_eq!(c.goal.text, "I want to know if it rains then and there");
    }

    #[test]
    fn markers_are_whole_words() {
        let c = parse_command_str("if iffy weather then thence go because becausal").unwrap();
        assert_eq!(c.state.text, "iffy weather");
        assert_eq!(c.action.text, "thence go");
        assert_eq!(c.goal.text, "becausal");
    }

    #[test]
    fn explanation_from_dialog() {
        let e = parse_explanation(
            "if i have an early morning meeting and i wake up at the same time as I usually do, then I will be late to my meeting.",
        )
        .unwrap();
        assert_eq!(
            e.condition.text,
            "i have an early morning meeting and i wake up at the same time as I usually do"
        );
        assert_eq!(e.consequence.text, "I will be late to my meeting");
    }

    #[test]
    fn minimal_explanation() {
        let e = parse_explanation("if X then Y").unwrap();
        assert_eq!(e.condition.text, "X");
        assert_eq!(e.consequence.text, "Y");
    }

    #[test]
    fn explanation_errors() {
        assert_eq!(parse_explanation("because I said so"), Err(ParseError::NotIfThenFormat));
        assert_eq!(parse_explanation("if then Y"), Err(ParseError::NotIfThenFormat));
        assert_eq!(parse_explanation("if X then"), Err(ParseError::NotIfThenFormat));
        assert_eq!(parse_explanation("then X if Y"), Err(ParseError::NotIfThenFormat));
    }

    #[test]
    fn person_normalization_table() {
        assert_eq!(person_normalize("remind me to bring a jacket"), "bring a jacket");
        assert_eq!(person_normalize("tell me to close the windows"), "close the windows");
        assert_eq!(
            person_normalize("notify me about the email"),
            "notify me about the email"
        );
        assert_eq!(person_normalize("wake me up early"), "wake up early");
        assert_eq!(person_normalize("I want to be on time"), "I am on time");
        assert_eq!(person_normalize("I want to stay dry"), "I stay dry");
        assert_eq!(person_normalize("me first"), "me first");
        assert_eq!(person_normalize("it snows tonight"), "it snows tonight");
    }
}
