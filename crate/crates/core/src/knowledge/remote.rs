use std::thread;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::BeamEntry;
use super::{check_query, BeamResult, KnowledgeError, KnowledgeSource, RelationRegistry};

/// Request body of `POST /generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub subject: String,
    pub relation: String,
    pub beam_size: usize,
}

/// Success body of `POST /generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub objects: Vec<BeamEntry>,
}

/// Client for a generation server speaking `POST /generate`.
///
/// Transport failures and 5xx answers are retried up to `retries` times
/// with a fixed backoff, then surface as `BackendUnavailable`.
pub struct RemoteGenerator {
    endpoint: String,
    registry: RelationRegistry,
    agent: Agent,
    retries: usize,
    backoff: Duration,
}

impl RemoteGenerator {
    pub fn new(base_url: &str, registry: RelationRegistry) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self {
            endpoint: format!("{}/generate", base_url.trim_end_matches('/')),
            registry,
            agent,
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }

    pub fn with_retry_policy(mut self, retries: usize, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, request: &GenerateRequest) -> Result<Result<GenerateResponse, KnowledgeError>, String> {
        let mut response = match self.agent.post(&self.endpoint).send_json(request) {
            Ok(r) => r,
            Err(e) => return Err(e.to_string()),
        };
        let status = response.status().as_u16();
        match status {
            200 => Ok(response
                .body_mut()
                .read_json::<GenerateResponse>()
                .map_err(|e| KnowledgeError::MalformedResponse(e.to_string()))),
            400 => Ok(Err(KnowledgeError::UnknownRelation {
                relation: request.relation.clone(),
                line: None,
            })),
            500..=599 => Err(format!("server answered {status}")),
            other => Ok(Err(KnowledgeError::MalformedResponse(format!(
                "unexpected status {other}"
            )))),
        }
    }
}

impl KnowledgeSource for RemoteGenerator {
    fn registry(&self) -> &RelationRegistry {
        &self.registry
    }

    fn query(&self, relation: &str, subject: &str, beam: usize) -> Result<BeamResult, KnowledgeError> {
        check_query(&self.registry, relation, subject, beam)?;
        let request = GenerateRequest {
            subject: subject.to_owned(),
            relation: relation.to_owned(),
            beam_size: beam,
        };
        let attempts = self.retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.backoff);
            }
            match self.attempt(&request) {
                Ok(result) => {
                    let response = result?;
                    if response.objects.iter().any(|o| !o.score.is_finite()) {
                        return Err(KnowledgeError::MalformedResponse("non-finite score".into()));
                    }
                    let mut objects = response.objects;
                    objects.truncate(beam);
                    return Ok(BeamResult {
                        objects,
                        beam_size: beam,
                    });
                }
                Err(message) => {
                    warn!(
                        "generate request to {} failed (attempt {}): {message}",
                        self.endpoint,
                        attempt + 1
                    );
                    last_error = message;
                }
            }
        }
        Err(KnowledgeError::BackendUnavailable {
            attempts,
            message: last_error,
        })
    }
}
