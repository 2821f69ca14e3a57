//! Human-in-the-loop proof validation and knowledge acquisition.
//!
//! A session presents the best proofs for a command, or asks the user to
//! explain the missing link as an `if ... then ...` rule. Validated chains
//! and contributed rules go into the learned knowledge base.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Engine;
use crate::kbase::{KbError, Provenance};
use crate::parser::{parse_explanation, Command, UserExplanation};
use crate::prover::{
    fill_question, FullProof, HopSide, ProverError, QuestionForm, ResolutionContext, TemplateColor, TemplateSpec,
};

pub const NONE_OF_THE_ABOVE: &str = "None of the above";

/// Upper bound on prompts per session.
pub const MAX_PROMPTS: usize = 6;

const FORMAT_GUIDANCE: &str = " Please answer in the form 'if <condition> then <consequence>'.";

#[derive(Debug, Error)]
pub enum DialogError {
    #[error("expected a {expected} reply, got {found}")]
    ReplyKindMismatch { expected: ReplyKind, found: ReplyKind },
    #[error("choice {index} is outside 1..={options}")]
    ChoiceOutOfRange { index: usize, options: usize },
    #[error("session is already closed")]
    SessionAlreadyClosed,
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Kb(#[from] KbError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptKind {
    YesNo,
    /// Substantive options followed by [`NONE_OF_THE_ABOVE`].
    MultipleChoice {
        options: Vec<String>,
    },
    FreeText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    #[serde(flatten)]
    pub kind: PromptKind,
}

impl Prompt {
    fn expects(&self) -> ReplyKind {
        match self.kind {
            PromptKind::YesNo => ReplyKind::YesNo,
            PromptKind::MultipleChoice { .. } => ReplyKind::Choice,
            PromptKind::FreeText => ReplyKind::Text,
        }
    }

    /// Index of the "None of the above" option, if this is a choice prompt.
    pub fn none_index(&self) -> Option<usize> {
        match &self.kind {
            PromptKind::MultipleChoice { options } => Some(options.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyKind {
    Choice,
    YesNo,
    Text,
}

impl std::fmt::Display for ReplyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReplyKind::Choice => "choice",
            ReplyKind::YesNo => "yes/no",
            ReplyKind::Text => "text",
        })
    }
}

/// Choice indices are 1-based; the last index is "None of the above".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserReply {
    Choice {
        index: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        explanation: Option<String>,
    },
    YesNo(bool),
    Text(String),
}

impl UserReply {
    pub fn kind(&self) -> ReplyKind {
        match self {
            UserReply::Choice { .. } => ReplyKind::Choice,
            UserReply::YesNo(_) => ReplyKind::YesNo,
            UserReply::Text(_) => ReplyKind::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    MissingKnowledge,
    UnparseableExplanation,
    PromptLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Proved { proof: FullProof, validated_by: usize },
    ProvedAfterContribution { proof: FullProof, rules_added: Vec<u64> },
    Failed { reason: FailureReason },
}

impl Outcome {
    pub fn is_proved(&self) -> bool {
        !matches!(self, Outcome::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub prompt: Prompt,
    pub reply: UserReply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    NegationCheck,
    Presenting,
    Eliciting {
        /// The user rejected the proposed negation; the explanation's
        /// consequence stands in for it.
        rejected_negation: bool,
        reasked: bool,
    },
    Closed,
}

/// What a session produces after a reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Prompt(Prompt),
    Outcome(Outcome),
}

#[derive(Debug, Clone, Serialize)]
pub struct DialogSession {
    id: String,
    command: Command,
    template: TemplateSpec,
    phase: Phase,
    context: ResolutionContext,
    candidates: Vec<FullProof>,
    pending: Option<Prompt>,
    transcript: Vec<Exchange>,
    outcome: Option<Outcome>,
    rules_added: Vec<u64>,
}

impl DialogSession {
    /// Opens a session with a fresh random id.
    pub fn start(engine: &Engine, command: Command, color: TemplateColor) -> Result<(Self, Prompt), DialogError> {
        Self::start_with_id(engine, command, color, uuid::Uuid::new_v4().to_string())
    }

    pub fn start_with_id(
        engine: &Engine,
        command: Command,
        color: TemplateColor,
        id: String,
    ) -> Result<(Self, Prompt), DialogError> {
        let template = engine.templates().get(color)?.clone();
        let mut session = Self {
            id,
            command,
            template,
            phase: Phase::Closed,
            context: ResolutionContext::default(),
            candidates: Vec::new(),
            pending: None,
            transcript: Vec::new(),
            outcome: None,
            rules_added: Vec::new(),
        };
        let prompt = if session.template.uses_negation() {
            let negations = engine.prover().negate_goal(&session.command.goal.text)?;
            match negations.into_iter().next() {
                Some(candidate) => {
                    session.context.negated_goal = Some(candidate.text);
                    session.phase = Phase::NegationCheck;
                    session.prompt(QuestionForm::NegationCheck, PromptKind::YesNo)?
                }
                None => session.elicit(QuestionForm::Fallback, false)?,
            }
        } else {
            session.present(engine, QuestionForm::Present)?
        };
        session.pending = Some(prompt.clone());
        Ok((session, prompt))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn command(&self) -> &Command {
        &self.command
    }

    pub fn color(&self) -> TemplateColor {
        self.template.color
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn pending_prompt(&self) -> Option<&Prompt> {
        self.pending.as_ref()
    }

    pub fn candidates(&self) -> &[FullProof] {
        &self.candidates
    }

    pub fn transcript(&self) -> &[Exchange] {
        &self.transcript
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn rules_added(&self) -> &[u64] {
        &self.rules_added
    }

    pub fn is_closed(&self) -> bool {
        self.phase == Phase::Closed
    }

    /// One record per exchange, as JSON lines.
    pub fn transcript_jsonl(&self) -> String {
        self.transcript
            .iter()
            .map(|e| serde_json::to_string(e).expect("exchange serializes") + "\n")
            .collect()
    }

    /// Feeds one reply. Mismatched or out-of-range replies are rejected
    /// without changing the session.
    pub fn step(&mut self, engine: &Engine, reply: UserReply) -> Result<Step, DialogError> {
        let pending = match (&self.phase, &self.pending) {
            (Phase::Closed, _) | (_, None) => return Err(DialogError::SessionAlreadyClosed),
            (_, Some(p)) => p.clone(),
        };
        if pending.expects() != reply.kind() {
            return Err(DialogError::ReplyKindMismatch {
                expected: pending.expects(),
                found: reply.kind(),
            });
        }
        if let (UserReply::Choice { index, .. }, Some(options)) = (&reply, pending.none_index()) {
            if *index == 0 || *index > options {
                return Err(DialogError::ChoiceOutOfRange { index: *index, options });
            }
        }
        self.transcript.push(Exchange {
            prompt: pending.clone(),
            reply: reply.clone(),
        });
        self.pending = None;
        let mut step = self.advance(engine, &pending, reply)?;
        if matches!(step, Step::Prompt(_)) && self.transcript.len() >= MAX_PROMPTS {
            step = Step::Outcome(Outcome::Failed {
                reason: FailureReason::PromptLimit,
            });
        }
        match &step {
            Step::Prompt(p) => self.pending = Some(p.clone()),
            Step::Outcome(o) => {
                self.phase = Phase::Closed;
                self.outcome = Some(o.clone());
            }
        }
        Ok(step)
    }

    fn advance(&mut self, engine: &Engine, pending: &Prompt, reply: UserReply) -> Result<Step, DialogError> {
        match (self.phase.clone(), reply) {
            (Phase::NegationCheck, UserReply::YesNo(true)) => {
                Ok(Step::Prompt(self.present(engine, QuestionForm::NegationConfirmed)?))
            }
            (Phase::NegationCheck, UserReply::YesNo(false)) => {
                self.context.negated_goal = None;
                Ok(Step::Prompt(self.elicit(QuestionForm::NegationRejected, true)?))
            }
            (Phase::Presenting, UserReply::Choice { index, explanation }) => {
                let explanation = explanation.as_deref().and_then(|t| parse_explanation(t).ok());
                if index < pending.none_index().unwrap_or(0) {
                    return self.validate(engine, index, explanation);
                }
                match explanation {
                    Some(explanation) => self.contribute(engine, explanation, false),
                    None => Ok(Step::Prompt(self.elicit(QuestionForm::Fallback, false)?)),
                }
            }
            (
                Phase::Eliciting {
                    rejected_negation,
                    reasked,
                },
                UserReply::Text(text),
            ) => match parse_explanation(&text) {
                Ok(explanation) => self.contribute(engine, explanation, rejected_negation),
                Err(_) if !reasked => {
                    self.phase = Phase::Eliciting {
                        rejected_negation,
                        reasked: true,
                    };
                    Ok(Step::Prompt(Prompt {
                        text: format!("{}{FORMAT_GUIDANCE}", pending.text),
                        kind: PromptKind::FreeText,
                    }))
                }
                Err(_) => Ok(Step::Outcome(Outcome::Failed {
                    reason: FailureReason::UnparseableExplanation,
                })),
            },
            (phase, reply) => unreachable!("reply {reply:?} accepted in phase {phase:?}"),
        }
    }

    fn prompt(&self, form: QuestionForm, kind: PromptKind) -> Result<Prompt, DialogError> {
        let text = fill_question(self.template.question(form)?, &self.command, &self.context);
        Ok(Prompt { text, kind })
    }

    fn elicit(&mut self, form: QuestionForm, rejected_negation: bool) -> Result<Prompt, DialogError> {
        self.phase = Phase::Eliciting {
            rejected_negation,
            reasked: false,
        };
        self.prompt(form, PromptKind::FreeText)
    }

    /// Proves the command and offers the top proofs, or asks for an
    /// explanation when there are none.
    fn present(&mut self, engine: &Engine, form: QuestionForm) -> Result<Prompt, DialogError> {
        let proofs = {
            let kb = engine.kb();
            engine
                .prover()
                .prove_command(&self.template, &self.command, &self.context, &kb)?
        };
        // Proofs that differ only outside the shown implication read the
        // same; the best-ranked one stands for them.
        let focus = self.template.focus;
        let mut seen = std::collections::HashSet::new();
        self.candidates = proofs
            .proofs
            .into_iter()
            .filter(|p| seen.insert(p.option_text(focus)))
            .collect();
        if self.candidates.is_empty() {
            let form = if form == QuestionForm::Present {
                QuestionForm::Fallback
            } else {
                form
            };
            return self.elicit(form, false);
        }
        self.phase = Phase::Presenting;
        let mut options: Vec<String> = self.candidates.iter().map(|p| p.option_text(focus)).collect();
        options.push(NONE_OF_THE_ABOVE.to_owned());
        self.prompt(form, PromptKind::MultipleChoice { options })
    }

    fn validate(
        &mut self,
        engine: &Engine,
        index: usize,
        explanation: Option<UserExplanation>,
    ) -> Result<Step, DialogError> {
        let proof = self.candidates[index - 1].clone();
        {
            let mut kb = engine.kb_mut();
            for hop in proof.first.hops.iter().chain(&proof.second.hops) {
                if hop.side == HopSide::Rule {
                    continue;
                }
                let (condition, consequence) = hop.as_rule();
                let rule = kb.add_rule(condition, consequence, Provenance::GeneratorConfirmed, Some(&self.id))?;
                self.rules_added.push(rule.sequence_number);
            }
            if let Some(e) = explanation {
                let rule = kb.add_rule(
                    &e.condition.text,
                    &e.consequence.text,
                    Provenance::UserContributed,
                    Some(&self.id),
                )?;
                self.rules_added.push(rule.sequence_number);
            }
        }
        Ok(Step::Outcome(Outcome::Proved {
            proof,
            validated_by: index,
        }))
    }

    /// Stores the user's rule and re-runs the prover with it available.
    fn contribute(
        &mut self,
        engine: &Engine,
        explanation: UserExplanation,
        rejected_negation: bool,
    ) -> Result<Step, DialogError> {
        let seq = engine
            .kb_mut()
            .add_rule(
                &explanation.condition.text,
                &explanation.consequence.text,
                Provenance::UserContributed,
                Some(&self.id),
            )?
            .sequence_number;
        self.rules_added.push(seq);
        if rejected_negation {
            self.context.negated_goal = Some(explanation.consequence.text.clone());
        }
        let proofs = {
            let kb = engine.kb();
            engine
                .prover()
                .prove_command(&self.template, &self.command, &self.context, &kb)?
        };
        let added = &self.rules_added;
        let outcome = match proofs
            .proofs
            .into_iter()
            .find(|p| added.iter().any(|s| p.uses_rule(*s)))
        {
            Some(proof) => Outcome::ProvedAfterContribution {
                proof,
                rules_added: added.clone(),
            },
            None => Outcome::Failed {
                reason: FailureReason::MissingKnowledge,
            },
        };
        Ok(Step::Outcome(outcome))
    }
}
