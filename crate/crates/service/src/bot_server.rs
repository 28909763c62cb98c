//! Serves the reference runtime over the HTTP chat protocol.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, post};
use axum::{Json, Router};
use dialogforge_core::runtime::{MockBotRuntime, RuntimeError};
use serde::Deserialize;
use serde_json::json;

use crate::serve::ServerHandle;

#[derive(Deserialize, Default)]
struct StartBody {
    #[serde(default)]
    hint: Option<String>,
}

#[derive(Deserialize)]
struct MessageBody {
    text: String,
}

fn runtime_error(e: RuntimeError) -> Response {
    let status = match e {
        RuntimeError::UnknownSession(_) => StatusCode::NOT_FOUND,
        RuntimeError::SessionClosed(_) => StatusCode::GONE,
        RuntimeError::InvalidInjection(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, Json(json!({ "error": e.to_string() }))).into_response()
}

async fn start(State(rt): State<Arc<MockBotRuntime>>, body: Bytes) -> Response {
    let parsed = if body.iter().all(u8::is_ascii_whitespace) {
        Ok(StartBody::default())
    } else {
        serde_json::from_slice::<StartBody>(&body)
    };
    match parsed {
        Ok(b) => {
            let id = rt.start_session(b.hint.as_deref().unwrap_or(""));
            (StatusCode::CREATED, Json(json!({ "session_id": id }))).into_response()
        }
        Err(e) => (StatusCode::BAD_REQUEST, Json(json!({ "error": e.to_string() }))).into_response(),
    }
}

async fn message(
    State(rt): State<Arc<MockBotRuntime>>,
    Path(id): Path<String>,
    Json(body): Json<MessageBody>,
) -> Response {
    match rt.step_session(&id, &body.text) {
        Ok(reply) => Json(reply).into_response(),
        Err(e) => runtime_error(e),
    }
}

async fn end(State(rt): State<Arc<MockBotRuntime>>, Path(id): Path<String>) -> Response {
    match rt.end_session(&id) {
        Ok(()) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => runtime_error(e),
    }
}

pub fn router(runtime: Arc<MockBotRuntime>) -> Router {
    Router::new()
        .route("/v1/sessions", post(start))
        .route("/v1/sessions/{id}/messages", post(message))
        .route("/v1/sessions/{id}", delete(end))
        .with_state(runtime)
}

/// Binds `addr` (port 0 picks a free port) and serves the runtime on a
/// background thread.
pub fn spawn(runtime: Arc<MockBotRuntime>, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    ServerHandle::spawn(router(runtime), addr, "bot-server")
}
