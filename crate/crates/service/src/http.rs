//! Loopback HTTP API over a [`ReviewSession`].
//!
//! | method | path                        | body / result                          |
//! |--------|-----------------------------|----------------------------------------|
//! | GET    | `/chats`                    | list of chat summaries                 |
//! | POST   | `/chats`                    | multipart field `file`; import report  |
//! | GET    | `/chats/{id}`               | state, receipt and the chat payload    |
//! | GET    | `/chats/{id}/preview`       | exact payload bytes                    |
//! | DELETE | `/chats/{id}/urls/{index}`  | removed record and updated summary     |
//! | POST   | `/chats/{id}/submit`        | optional `{"targets": [...]}`; receipt |

use std::net::{Ipv4Addr, SocketAddr};
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::RwLock;
use ucds_core::{payload, ParseError, PipelineError};

use crate::session::{deliver_all, Importer, ReviewSession, SessionError};
use crate::submit::{Dispatcher, Target};

pub const DEFAULT_PORT: u16 = 8787;

#[derive(Clone)]
pub struct AppState {
    session: Arc<RwLock<ReviewSession>>,
    importer: Arc<Importer>,
    dispatcher: Arc<Dispatcher>,
    default_targets: Arc<Vec<Target>>,
}

impl AppState {
    pub fn new(session: ReviewSession, importer: Importer, dispatcher: Dispatcher, default_targets: Vec<Target>) -> Self {
        AppState {
            session: Arc::new(RwLock::new(session)),
            importer: Arc::new(importer),
            dispatcher: Arc::new(dispatcher),
            default_targets: Arc::new(default_targets),
        }
    }

    pub fn session(&self) -> Arc<RwLock<ReviewSession>> {
        self.session.clone()
    }
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

fn status_of(e: &SessionError) -> (StatusCode, &'static str) {
    match e {
        SessionError::Pipeline(PipelineError::Parse(ParseError::EmptyExport)) => {
            (StatusCode::UNPROCESSABLE_ENTITY, "empty_export")
        }
        SessionError::Pipeline(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unparseable_export"),
        SessionError::Oversized { .. } => (StatusCode::PAYLOAD_TOO_LARGE, "oversized"),
        SessionError::UnknownChat(_) => (StatusCode::NOT_FOUND, "unknown_chat"),
        SessionError::Edit(_) => (StatusCode::NOT_FOUND, "index_out_of_range"),
        SessionError::AlreadySubmitted(_) => (StatusCode::CONFLICT, "already_submitted"),
        SessionError::SubmissionInProgress(_) => (StatusCode::CONFLICT, "submission_in_progress"),
        SessionError::NoTargets => (StatusCode::BAD_REQUEST, "no_targets"),
        SessionError::TargetUnreachable { .. } => (StatusCode::BAD_GATEWAY, "target_unreachable"),
        SessionError::Io { .. } | SessionError::Corrupt { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
    }
}

fn error_response(status: StatusCode, kind: &str, message: String) -> Response {
    (status, Json(json!({ "error": kind, "message": message }))).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = status_of(&self.0);
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        error_response(status, kind, self.0.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    // Leave room for multipart framing around a maximal export.
    let body_limit = usize::try_from(state.importer.max_bytes()).unwrap_or(usize::MAX).saturating_add(64 * 1024);
    Router::new()
        .route("/chats", get(list_chats).post(import_chat))
        .route("/chats/{id}", get(get_chat))
        .route("/chats/{id}/preview", get(preview))
        .route("/chats/{id}/urls/{index}", delete(delete_url))
        .route("/chats/{id}/submit", post(submit))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

async fn list_chats(State(state): State<AppState>) -> Json<Value> {
    Json(json!(state.session.read().await.list()))
}

async fn import_chat(State(state): State<AppState>, mut multipart: Multipart) -> Response {
    let mut file = None;
    loop {
        match multipart.next_field().await {
            Ok(Some(field)) if field.name() == Some("file") => {
                let name = field.file_name().unwrap_or("upload.txt").to_string();
                match field.bytes().await {
                    Ok(bytes) => file = Some((name, bytes)),
                    Err(e) => return error_response(e.status(), "bad_upload", e.body_text()),
                }
            }
            Ok(Some(_)) => {}
            Ok(None) => break,
            Err(e) => return error_response(e.status(), "bad_upload", e.body_text()),
        }
    }
    let Some((name, bytes)) = file else {
        return error_response(StatusCode::BAD_REQUEST, "bad_upload", "missing multipart field \"file\"".into());
    };
    let importer = state.importer.clone();
    let imported = tokio::task::spawn_blocking(move || importer.import_bytes(&bytes, &name))
        .await
        .expect("import task panicked");
    let result = match imported {
        Ok(imported) => state.session.write().await.add(imported),
        Err(e) => Err(e),
    };
    match result {
        Ok(report) => (StatusCode::CREATED, Json(report)).into_response(),
        Err(e) => ApiError(e).into_response(),
    }
}

async fn get_chat(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let mut session = state.session.write().await;
    let c = session.review(&id)?;
    let chat: Value = serde_json::from_slice(&payload::to_bytes(&c.chat)).expect("payload is valid json");
    Ok(Json(json!({ "state": c.state, "receipt": c.receipt, "chat": chat })))
}

async fn preview(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let bytes = state.session.write().await.preview(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn delete_url(State(state): State<AppState>, Path((id, index)): Path<(String, usize)>) -> ApiResult<Json<Value>> {
    let mut session = state.session.write().await;
    let removed = session.delete_url(&id, index)?;
    let summary = session.list().into_iter().find(|s| s.chat_id == id || s.chat_label == id);
    Ok(Json(json!({ "removed": removed, "chat": summary })))
}

#[derive(Debug, Default, Deserialize)]
struct SubmitRequest {
    #[serde(default)]
    targets: Option<Vec<Target>>,
}

async fn submit(State(state): State<AppState>, Path(id): Path<String>, body: axum::body::Bytes) -> ApiResult<Response> {
    let request: SubmitRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SubmitRequest::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(e) => return Ok(error_response(StatusCode::BAD_REQUEST, "bad_request", e.to_string())),
        }
    };
    let targets = request.targets.unwrap_or_else(|| state.default_targets.as_ref().clone());
    let pending = state.session.write().await.begin_submit(&id, targets)?;
    let dispatcher = state.dispatcher.clone();
    let (pending, outcome) = tokio::task::spawn_blocking(move || {
        let outcome = deliver_all(&dispatcher, &pending);
        (pending, outcome)
    })
    .await
    .expect("delivery task panicked");
    let receipt = state.session.write().await.finish_submit(pending, outcome)?;
    Ok(Json(receipt).into_response())
}

/// Binds `127.0.0.1:port`. Port 0 picks a free port.
pub async fn bind(port: u16) -> std::io::Result<TcpListener> {
    TcpListener::bind(SocketAddr::from((Ipv4Addr::LOCALHOST, port))).await
}

pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
