//! Logic templates as configuration data.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProverError;
use crate::parser::{Clause, Command};

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClauseRole {
    State,
    Action,
    Goal,
    NegatedGoal,
    HiddenAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationSpec {
    pub head: ClauseRole,
    pub body: ClauseRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_context: Option<ClauseRole>,
}

impl fmt::Display for ImplicationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} :- {:?}", self.head, self.body)?;
        if let Some(ctx) = self.body_context {
            write!(f, "({ctx:?})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateColor {
    Blue,
    Orange,
    Green,
}

impl TemplateColor {
    pub const ALL: [TemplateColor; 3] = [TemplateColor::Orange, TemplateColor::Green, TemplateColor::Blue];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateColor::Blue => "blue",
            TemplateColor::Orange => "orange",
            TemplateColor::Green => "green",
        }
    }
}

impl fmt::Display for TemplateColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateColor {
    type Err = ProverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blue" => Ok(TemplateColor::Blue),
            "orange" => Ok(TemplateColor::Orange),
            "green" => Ok(TemplateColor::Green),
            other => Err(ProverError::UnsupportedTemplate(other.to_owned())),
        }
    }
}

/// Dialog phases that need a question phrasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionForm {
    /// Yes/no check of a candidate goal negation.
    NegationCheck,
    /// Candidates or explanation request after the negation was confirmed.
    NegationConfirmed,
    /// Explanation request after the negation was rejected.
    NegationRejected,
    /// Multiple-choice presentation of candidate proofs.
    Present,
    /// Open question when no acceptable proof exists.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub color: TemplateColor,
    pub implications: [ImplicationSpec; 2],
    /// Implication whose chains are shown to the user as options.
    pub focus: usize,
    pub question_forms: BTreeMap<QuestionForm, String>,
}

impl TemplateSpec {
    pub fn uses_negation(&self) -> bool {
        self.implications
            .iter()
            .any(|i| i.head == ClauseRole::NegatedGoal || i.body == ClauseRole::NegatedGoal)
    }

    /// Forms a template must define to be usable by the dialog.
    pub fn required_forms(&self) -> Vec<QuestionForm> {
        if self.uses_negation() {
            vec![
                QuestionForm::NegationCheck,
                QuestionForm::NegationConfirmed,
                QuestionForm::NegationRejected,
                QuestionForm::Fallback,
            ]
        } else {
            vec![QuestionForm::Present, QuestionForm::Fallback]
        }
    }

    pub fn question(&self, form: QuestionForm) -> Result<&str, ProverError> {
        self.question_forms
            .get(&form)
            .map(String::as_str)
            .ok_or(ProverError::MissingQuestionForm {
                color: self.color,
                form,
            })
    }

    fn validate(&self) -> Result<(), ProverError> {
        for imp in &self.implications {
            if imp.head == imp.body {
                return Err(ProverError::InvalidTemplate(format!(
                    "{}: implication head and body are both {:?}",
                    self.color, imp.head
                )));
            }
        }
        if self.focus > 1 {
            return Err(ProverError::InvalidTemplate(format!(
                "{}: focus must be 0 or 1",
                self.color
            )));
        }
        for form in self.required_forms() {
            self.question(form)?;
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct TemplateEntry {
    implications: Vec<ImplicationSpec>,
    #[serde(default)]
    focus: usize,
    questions: BTreeMap<QuestionForm, String>,
}

/// The configured templates, keyed by color.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateColor, TemplateSpec>,
}

impl TemplateSet {
    pub fn from_toml(content: &str) -> Result<Self, ProverError> {
        let raw: BTreeMap<String, TemplateEntry> =
            toml::from_str(content).map_err(|e| ProverError::InvalidTemplate(e.to_string()))?;
        let mut templates = BTreeMap::new();
        for (name, entry) in raw {
            let color: TemplateColor = name.parse()?;
            let implications: [ImplicationSpec; 2] = entry.implications.try_into().map_err(|v: Vec<_>| {
                ProverError::InvalidTemplate(format!("{name}: expected 2 implications, found {}", v.len()))
            })?;
            let spec = TemplateSpec {
                color,
                implications,
                focus: entry.focus,
                question_forms: entry.questions,
            };
            spec.validate()?;
            templates.insert(color, spec);
        }
        Ok(Self { templates })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProverError> {
        let content = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ProverError::InvalidTemplate(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&content)
    }

    pub fn get(&self, color: TemplateColor) -> Result<&TemplateSpec, ProverError> {
        self.templates
            .get(&color)
            .ok_or_else(|| ProverError::UnsupportedTemplate(color.to_string()))
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::from_toml(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }
}

/// Bindings for roles that are not spelled out in the command.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionContext {
    /// A negation of the goal confirmed by the user (or supplied by them).
    pub negated_goal: Option<String>,
    /// A hidden action elicited from the user.
    pub hidden_action: Option<String>,
}

/// Clause bound to `role`.
pub fn resolve_clause(role: ClauseRole, command: &Command, context: &ResolutionContext) -> Result<Clause, ProverError> {
    let bound = |value: &Option<String>| {
        value
            .as_deref()
            .and_then(Clause::from_text)
            .ok_or(ProverError::UnresolvableRole(role))
    };
    match role {
        ClauseRole::State => Ok(command.state.clone()),
        ClauseRole::Action => Ok(command.action.clone()),
        ClauseRole::Goal => Ok(command.goal.clone()),
        ClauseRole::NegatedGoal => bound(&context.negated_goal),
        ClauseRole::HiddenAction => bound(&context.hidden_action),
    }
}

/// Fills the slots of a question phrasing.
pub fn fill_question(form: &str, command: &Command, context: &ResolutionContext) -> String {
    let mut out = form
        .replace("{state}", &command.state.text)
        .replace("{action}", &command.action.normalized_text)
        .replace("{goal_verbatim}", &command.goal.text)
        .replace("{goal}", &command.goal.normalized_text);
    if let Some(neg) = &context.negated_goal {
        out = out.replace("{neg_goal}", neg);
    }
    if let Some(hidden) = &context.hidden_action {
        out = out.replace("{hidden_action}", hidden);
    }
    out
}
