//! HTTP generation server backed by a [`StaticTupleStore`].
//!
//! Speaks the same `POST /generate` protocol that [`RemoteGenerator`]
//! consumes, so a static store can stand in for a trained generator.
//!
//! [`RemoteGenerator`]: super::RemoteGenerator

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::json;
use tokio::sync::oneshot;

use super::remote::{GenerateRequest, GenerateResponse};
use super::{KnowledgeError, KnowledgeSource, StaticTupleStore};

pub fn router(store: Arc<StaticTupleStore>) -> Router {
    Router::new().route("/generate", post(generate)).with_state(store)
}

async fn generate(State(store): State<Arc<StaticTupleStore>>, Json(request): Json<GenerateRequest>) -> Response {
    match store.query(&request.relation, &request.subject, request.beam_size) {
        Ok(beam) => Json(GenerateResponse { objects: beam.objects }).into_response(),
        Err(e @ (KnowledgeError::UnknownRelation { .. } | KnowledgeError::InvalidQuery(_))) => {
            (StatusCode::BAD_REQUEST, Json(json!({ "error": e.to_string() }))).into_response()
        }
        Err(e) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(json!({ "error": e.to_string() })),
        )
            .into_response(),
    }
}

/// An emulator running on a background thread; stops when dropped.
pub struct EmulatorHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl EmulatorHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for EmulatorHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a new thread.
pub fn spawn(store: StaticTupleStore, addr: SocketAddr) -> std::io::Result<EmulatorHandle> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(Arc::new(store));
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(EmulatorHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
