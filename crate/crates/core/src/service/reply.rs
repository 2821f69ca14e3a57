use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialog::{PromptKind, UserReply};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplyError {
    #[error("a reply needs exactly one of `choice`, `yesno` or `text`")]
    Ambiguous,
    #[error("`explanation` only accompanies a choice")]
    StrayExplanation,
    #[error("could not read `{0}` as a reply")]
    Unreadable(String),
}

/// Flat JSON form of a reply: `{"choice": 2, "explanation": "..."}`,
/// `{"yesno": true}` or `{"text": "..."}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplyBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yesno: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

impl TryFrom<ReplyBody> for UserReply {
    type Error = ReplyError;

    fn try_from(body: ReplyBody) -> Result<Self, Self::Error> {
        if body.explanation.is_some() && body.choice.is_none() {
            return Err(ReplyError::StrayExplanation);
        }
        match (body.choice, body.yesno, body.text) {
            (Some(index), None, None) => Ok(UserReply::Choice {
                index,
                explanation: body.explanation,
            }),
            (None, Some(flag), None) => Ok(UserReply::YesNo(flag)),
            (None, None, Some(text)) => Ok(UserReply::Text(text)),
            _ => Err(ReplyError::Ambiguous),
        }
    }
}

impl From<UserReply> for ReplyBody {
    fn from(reply: UserReply) -> Self {
        match reply {
            UserReply::Choice { index, explanation } => ReplyBody {
                choice: Some(index),
                explanation,
                ..Default::default()
            },
            UserReply::YesNo(flag) => ReplyBody {
                yesno: Some(flag),
                ..Default::default()
            },
            UserReply::Text(text) => ReplyBody {
                text: Some(text),
                ..Default::default()
            },
        }
    }
}

/// Reads a line typed at the terminal as a reply to a prompt of `kind`.
///
/// Choices are a number optionally followed by an explanation
/// (`2 if it rains then I get wet`); yes/no accepts `y`, `yes`, `n`, `no`.
pub fn parse_terminal_reply(kind: &PromptKind, line: &str) -> Result<UserReply, ReplyError> {
    let line = line.trim();
    let unreadable = || ReplyError::Unreadable(line.to_owned());
    match kind {
        PromptKind::YesNo => match line.to_ascii_lowercase().as_str() {
            "y" | "yes" => Ok(UserReply::YesNo(true)),
            "n" | "no" => Ok(UserReply::YesNo(false)),
            _ => Err(unreadable()),
        },
        PromptKind::MultipleChoice { .. } => {
            let (number, rest) = line.split_once(|c: char| !c.is_ascii_digit()).unwrap_or((line, ""));
            let index = number.parse().map_err(|_| unreadable())?;
            let rest = rest.trim_start_matches([',', '.', ':', ')']).trim();
            Ok(UserReply::Choice {
                index,
                explanation: (!rest.is_empty()).then(|| rest.to_owned()),
            })
        }
        PromptKind::FreeText => Ok(UserReply::Text(line.to_owned())),
    }
}
