use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, PoisonError};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::info;
use serde::Deserialize;
use serde_json::json;

use super::reply::ReplyBody;
use crate::dialog::{DialogError, DialogSession, Step, UserReply};
use crate::engine::Engine;
use crate::knowledge::KnowledgeError;
use crate::parser::parse_command_str;
use crate::prover::{ProverError, TemplateColor};

pub const SESSION_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

struct Entry {
    session: DialogSession,
    last_used: Instant,
}

/// Live sessions; each one sits behind its own lock so steps on one
/// session are serialized while different sessions proceed in parallel.
#[derive(Clone)]
pub struct SessionStore {
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Entry>>>>>,
    idle_timeout: Duration,
}

impl SessionStore {
    pub fn new(idle_timeout: Duration) -> Self {
        Self {
            sessions: Arc::default(),
            idle_timeout,
        }
    }

    fn insert(&self, session: DialogSession) {
        let id = session.id().to_owned();
        let entry = Entry {
            session,
            last_used: Instant::now(),
        };
        self.lock().insert(id, Arc::new(Mutex::new(entry)));
    }

    fn get(&self, id: &str) -> Option<Arc<Mutex<Entry>>> {
        let entry = self.lock().get(id).cloned()?;
        let idle = entry.lock().unwrap_or_else(PoisonError::into_inner).last_used.elapsed();
        if idle > self.idle_timeout {
            self.lock().remove(id);
            return None;
        }
        Some(entry)
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    pub fn purge_expired(&self) -> usize {
        let mut map = self.lock();
        let before = map.len();
        map.retain(|_, e| {
            e.try_lock()
                .map(|e| e.last_used.elapsed() <= self.idle_timeout)
                .unwrap_or(true)
        });
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<Mutex<Entry>>>> {
        self.sessions.lock().unwrap_or_else(PoisonError::into_inner)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub sessions: SessionStore,
}

impl AppState {
    pub fn new(engine: Arc<Engine>) -> Self {
        Self {
            engine,
            sessions: SessionStore::new(SESSION_IDLE_TIMEOUT),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_view))
        .route("/sessions/{id}/reply", post(reply))
        .with_state(state)
}

/// Serves until Ctrl-C, then finishes in-flight requests.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on http://{}", listener.local_addr()?);
    let sessions = state.sessions.clone();
    let sweeper = tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sessions.purge_expired();
        }
    });
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            info!("shutting down");
        })
        .await;
    sweeper.abort();
    result
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

fn dialog_error(e: DialogError) -> Response {
    let status = match &e {
        DialogError::ReplyKindMismatch { .. } | DialogError::ChoiceOutOfRange { .. } => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        DialogError::SessionAlreadyClosed => StatusCode::CONFLICT,
        DialogError::Prover(ProverError::Knowledge(KnowledgeError::BackendUnavailable { .. })) => {
            StatusCode::SERVICE_UNAVAILABLE
        }
        DialogError::Prover(ProverError::UnsupportedTemplate(_)) => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    error(status, e)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
struct CreateSession {
    command: String,
    template: String,
}

async fn create_session(State(state): State<AppState>, body: Result<Json<CreateSession>, JsonRejection>) -> Response {
    let Json(body) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    let command = match parse_command_str(&body.command) {
        Ok(c) => c,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let color: TemplateColor = match body.template.parse() {
        Ok(c) => c,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let engine = state.engine.clone();
    let started = tokio::task::spawn_blocking(move || DialogSession::start(&engine, command, color)).await;
    match started {
        Ok(Ok((session, prompt))) => {
            let id = session.id().to_owned();
            state.sessions.insert(session);
            (StatusCode::CREATED, Json(json!({ "id": id, "prompt": prompt }))).into_response()
        }
        Ok(Err(e)) => dialog_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn reply(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ReplyBody>, JsonRejection>,
) -> Response {
    let Some(entry) = state.sessions.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("no session `{id}`"));
    };
    let reply: UserReply = match body
        .map_err(|e| e.body_text())
        .and_then(|Json(b)| b.try_into().map_err(|e: super::ReplyError| e.to_string()))
    {
        Ok(r) => r,
        Err(message) => return error(StatusCode::BAD_REQUEST, message),
    };
    let engine = state.engine.clone();
    let stepped = tokio::task::spawn_blocking(move || {
        let mut entry = entry.lock().unwrap_or_else(PoisonError::into_inner);
        entry.last_used = Instant::now();
        entry.session.step(&engine, reply)
    })
    .await;
    match stepped {
        Ok(Ok(Step::Prompt(prompt))) => Json(json!({ "prompt": prompt })).into_response(),
        Ok(Ok(Step::Outcome(outcome))) => Json(json!({ "outcome": outcome })).into_response(),
        Ok(Err(e)) => dialog_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn session_view(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.sessions.get(&id) {
        Some(entry) => {
            let entry = entry.lock().unwrap_or_else(PoisonError::into_inner);
            Json(&entry.session).into_response()
        }
        None => error(StatusCode::NOT_FOUND, format!("no session `{id}`")),
    }
}
