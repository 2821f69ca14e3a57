use std::collections::VecDeque;
use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reply::ReplyBody;
use crate::dialog::{DialogError, DialogSession, Outcome, Prompt, PromptKind, Step, UserReply};
use crate::engine::Engine;
use crate::parser::{parse_command_str, Command};
use crate::prover::TemplateColor;

/// Text a scripted user types once its replies run out.
pub const FALLBACK_TEXT: &str = "i do not know";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
    #[error("scripts line {line}: {message}")]
    Scripts { line: usize, message: String },
    #[error("no script for dataset line {line}")]
    MissingScript { line: usize },
    #[error("dataset line {line}: {source}")]
    Session { line: usize, source: DialogError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub line: usize,
    pub color: TemplateColor,
    pub command: Command,
}

/// Parses `color<TAB>command` lines; blank lines and `#` comments are skipped.
pub fn load_dataset(content: &str) -> Result<Vec<DatasetEntry>, EvalError> {
    let mut entries = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let err = |message: String| EvalError::Dataset { line, message };
        let (color, text) = raw
            .split_once('\t')
            .ok_or_else(|| err("expected `color<TAB>command`".into()))?;
        let color: TemplateColor = color.parse().map_err(|e| err(format!("{e}")))?;
        let command = parse_command_str(text).map_err(|e| err(e.to_string()))?;
        entries.push(DatasetEntry { line, color, command });
    }
    Ok(entries)
}

#[derive(Deserialize)]
struct ScriptLine {
    replies: Vec<ReplyBody>,
}

/// Parses one `{"replies": [...]}` object per non-blank line.
pub fn load_scripts(content: &str) -> Result<Vec<ScriptedUser>, EvalError> {
    let mut users = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| EvalError::Scripts { line, message };
        let parsed: ScriptLine = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        let replies = parsed
            .replies
            .into_iter()
            .map(|b| UserReply::try_from(b).map_err(|e| err(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        users.push(ScriptedUser::new(replies));
    }
    Ok(users)
}

/// Replays fixed replies in prompt order. Once they run out it picks
/// "None of the above", answers no, and types [`FALLBACK_TEXT`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedUser {
    replies: VecDeque<UserReply>,
}

impl ScriptedUser {
    pub fn new(replies: impl IntoIterator<Item = UserReply>) -> Self {
        Self {
            replies: replies.into_iter().collect(),
        }
    }

    pub fn reply(&mut self, prompt: &Prompt) -> UserReply {
        if let Some(reply) = self.replies.pop_front() {
            return reply;
        }
        match &prompt.kind {
            PromptKind::MultipleChoice { options } => UserReply::Choice {
                index: options.len(),
                explanation: None,
            },
            PromptKind::YesNo => UserReply::YesNo(false),
            PromptKind::FreeText => UserReply::Text(FALLBACK_TEXT.to_owned()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalRow {
    pub proved: usize,
    pub tried: usize,
}

impl EvalRow {
    /// `proved / tried`, or `None` when nothing was tried.
    pub fn ratio(&self) -> Option<f64> {
        (self.tried > 0).then(|| self.proved as f64 / self.tried as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandResult {
    pub line: usize,
    pub color: TemplateColor,
    pub outcome: Outcome,
    pub prompts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Orange, green, blue.
    pub rows: Vec<(TemplateColor, EvalRow)>,
    pub total: EvalRow,
    pub rules_added: usize,
    pub commands: Vec<CommandResult>,
}

impl EvalReport {
    pub fn row(&self, color: TemplateColor) -> EvalRow {
        self.rows
            .iter()
            .find(|(c, _)| *c == color)
            .map(|(_, r)| *r)
            .expect("every color has a row")
    }

    pub fn to_json(&self) -> String {
        let row = |name: &str, r: &EvalRow| serde_json::json!({ "template": name, "proved": r.proved, "tried": r.tried, "ratio": r.ratio() });
        let mut rows: Vec<_> = self.rows.iter().map(|(c, r)| row(c.as_str(), r)).collect();
        rows.push(row("total", &self.total));
        serde_json::to_string_pretty(&serde_json::json!({
            "rows": rows,
            "rules_added": self.rules_added,
            "commands": self.commands,
        }))
        .expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(
            out,
            "{:<10}{:>8}{:>8}{:>14}",
            "template", "proved", "tried", "proved/tried"
        )?;
        let mut line = |name: &str, r: &EvalRow| {
            let ratio = r.ratio().map_or_else(|| "-".to_owned(), |x| format!("{x:.4}"));
            writeln!(out, "{:<10}{:>8}{:>8}{:>14}", name, r.proved, r.tried, ratio)
        };
        for (color, row) in &self.rows {
            line(color.as_str(), row)?;
        }
        line("total", &self.total)?;
        writeln!(out, "rules added: {}", self.rules_added)?;
        f.write_str(&out)
    }
}

/// Runs one scripted session per dataset entry against a throwaway copy
/// of the engine's learned rules; the engine's own rules are restored
/// afterwards.
pub fn run_eval(
    engine: &Engine,
    dataset: &[DatasetEntry],
    scripts: Vec<ScriptedUser>,
) -> Result<EvalReport, EvalError> {
    if let Some(entry) = dataset.get(scripts.len()) {
        return Err(EvalError::MissingScript { line: entry.line });
    }
    let fork = engine.kb().fork_in_memory();
    let start_len = fork.len();
    let original = engine.replace_kb(fork);
    let result = run_sessions(engine, dataset, scripts);
    let forked = engine.replace_kb(original);
    let commands = result?;

    let mut rows: Vec<(TemplateColor, EvalRow)> = TemplateColor::ALL
        .iter()
        .map(|c| (*c, EvalRow { proved: 0, tried: 0 }))
        .collect();
    for result in &commands {
        let (_, row) = rows.iter_mut().find(|(c, _)| *c == result.color).expect("known color");
        row.tried += 1;
        row.proved += usize::from(result.outcome.is_proved());
    }
    let total = EvalRow {
        proved: rows.iter().map(|(_, r)| r.proved).sum(),
        tried: rows.iter().map(|(_, r)| r.tried).sum(),
    };
    Ok(EvalReport {
        rows,
        total,
        rules_added: forked.len() - start_len,
        commands,
    })
}

fn run_sessions(
    engine: &Engine,
    dataset: &[DatasetEntry],
    scripts: Vec<ScriptedUser>,
) -> Result<Vec<CommandResult>, EvalError> {
    let mut results = Vec::with_capacity(dataset.len());
    for (entry, mut user) in dataset.iter().zip(scripts) {
        let line = entry.line;
        let session_err = |source| EvalError::Session { line, source };
        let (mut session, mut prompt) =
            DialogSession::start_with_id(engine, entry.command.clone(), entry.color, format!("eval-{line}"))
                .map_err(session_err)?;
        let outcome = loop {
            match session.step(engine, user.reply(&prompt)).map_err(session_err)? {
                Step::Prompt(next) => prompt = next,
                Step::Outcome(outcome) => break outcome,
            }
        };
        results.push(CommandResult {
            line,
            color: entry.color,
            outcome,
            prompts: session.transcript().len(),
        });
    }
    Ok(results)
}

/// [`run_eval`] over a dataset file and a scripts file.
pub fn run_eval_files(engine: &Engine, dataset: &Path, scripts: &Path) -> Result<EvalReport, EvalError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| EvalError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let dataset = load_dataset(&read(dataset)?)?;
    let scripts = load_scripts(&read(scripts)?)?;
    run_eval(engine, &dataset, scripts)
}
