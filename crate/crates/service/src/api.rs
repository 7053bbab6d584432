//! Routes and handlers. Handlers do their work in `spawn_blocking`: training
//! and corpus builds are CPU bound, and sessions sit behind std mutexes.

use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use summation_core::hierarchy::ExportOptions;
use summation_core::ingest::Corpus;
use summation_core::preference::{Choice, PreferenceLogEntry, QueryPair};

use crate::session::{Session, SessionError, SessionState};
use crate::store::{CorpusMeta, Mark, SessionEvent, SessionHeader};
use crate::{build_corpus, AppState, CorpusStatus};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} {id} not found"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::Conflict(_) => StatusCode::CONFLICT,
            SessionError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(e.status(), e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!("{}", self.message);
        }
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<AppState>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/corpora", post(create_corpus))
        .route("/corpora/{id}", get(corpus_status))
        .route("/corpora/{id}/hierarchy", get(corpus_hierarchy))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_view))
        .route("/sessions/{id}/query", get(next_query))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/summary", post(summary))
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRequest {
    /// Corpus as JSON lines.
    pub jsonl: Option<String>,
    /// Path to a JSON-lines file readable by the server.
    pub path: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusResponse {
    pub corpus_id: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_documents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_concepts: Option<usize>,
}

fn corpus_response(id: &str, status: &CorpusStatus) -> CorpusResponse {
    let mut out = CorpusResponse { corpus_id: id.into(), status: String::new(), error: None, num_documents: None, num_concepts: None };
    match status {
        CorpusStatus::Building => out.status = "building".into(),
        CorpusStatus::Ready(org) => {
            out.status = "ready".into();
            out.num_documents = Some(org.num_documents);
            out.num_concepts = Some(org.concepts.len());
        }
        CorpusStatus::Failed(e) => {
            out.status = "failed".into();
            out.error = Some(e.clone());
        }
    }
    out
}

async fn create_corpus(
    State(state): State<Shared>,
    body: Result<Json<CorpusRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CorpusResponse>)> {
    let Json(req) = body?;
    let text = match (req.jsonl, req.path) {
        (Some(text), None) => text,
        (None, Some(path)) => tokio::fs::read_to_string(&path)
            .await
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("{path}: {e}")))?,
        _ => return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "give exactly one of jsonl or path")),
    };
    // reject malformed input up front; the expensive build runs detached
    Corpus::parse_jsonl(&text).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let meta = CorpusMeta { corpus_id: uuid::Uuid::new_v4().to_string(), seed: req.seed.unwrap_or(state.seed) };
    let id = meta.corpus_id.clone();
    state.store.save_corpus(&meta, &text).map_err(ApiError::internal)?;
    state.corpora.write().expect("lock").insert(id.clone(), CorpusStatus::Building);
    let bg = state.clone();
    tokio::task::spawn_blocking(move || {
        let status = build_corpus(&meta, &text);
        if let CorpusStatus::Failed(e) = &status {
            tracing::warn!("corpus {} failed: {e}", meta.corpus_id);
        }
        bg.corpora.write().expect("lock").insert(meta.corpus_id, status);
    });
    Ok((StatusCode::ACCEPTED, Json(corpus_response(&id, &CorpusStatus::Building))))
}

fn corpus(state: &AppState, id: &str) -> ApiResult<CorpusStatus> {
    state.corpora.read().expect("lock").get(id).cloned().ok_or_else(|| ApiError::not_found("corpus", id))
}

async fn corpus_status(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<CorpusResponse>> {
    Ok(Json(corpus_response(&id, &corpus(&state, &id)?)))
}

async fn corpus_hierarchy(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    match corpus(&state, &id)? {
        CorpusStatus::Ready(org) => Ok(Json(org.export(ExportOptions::default())).into_response()),
        _ => Err(ApiError::new(StatusCode::NOT_FOUND, format!("corpus {id} has no hierarchy yet"))),
    }
}

fn default_round_size() -> usize {
    5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRequest {
    pub corpus_id: String,
    pub query_budget: usize,
    pub summary_budget: usize,
    pub feature_set_size: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_round_size")]
    pub round_size: usize,
}

async fn create_session(
    State(state): State<Shared>,
    body: Result<Json<SessionRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let Json(req) = body?;
    let organized = match corpus(&state, &req.corpus_id)? {
        CorpusStatus::Ready(org) => org,
        CorpusStatus::Building => return Err(ApiError::new(StatusCode::CONFLICT, "corpus is still building")),
        CorpusStatus::Failed(e) => return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("corpus failed: {e}"))),
    };
    let header = SessionHeader {
        session_id: uuid::Uuid::new_v4().to_string(),
        corpus_id: req.corpus_id,
        query_budget: req.query_budget,
        summary_budget: req.summary_budget,
        feature_set_size: req.feature_set_size,
        round_size: req.round_size,
        seed: req.seed.unwrap_or(state.seed),
        created: now(),
    };
    let st = state.clone();
    let (id, session_state) = blocking(move || {
        let session = Session::new(header, organized)?;
        st.store.create_session(&session.header).map_err(ApiError::internal)?;
        let id = session.header.session_id.clone();
        let session_state = session.state;
        st.sessions.write().expect("lock").insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok((id, session_state))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id, "state": session_state }))))
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
    state.sessions.read().expect("lock").get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
}

/// Runs `f` on the locked session in a blocking task.
async fn with_session<T: Send + 'static>(
    state: Shared,
    id: String,
    f: impl FnOnce(&AppState, &mut Session) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let handle = session(&state, &id)?;
    blocking(move || {
        let mut guard = handle.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        f(&state, &mut guard)
    })
    .await
}

async fn session_view(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    with_session(state, id, |_, s| Ok(Json(s.view()).into_response())).await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryResponse {
    #[serde(flatten)]
    pub pair: QueryPair,
    pub left_label: String,
    pub right_label: String,
    pub budget_remaining: usize,
}

async fn next_query(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    with_session(state, id, |_, s| {
        Ok(match s.next_query()? {
            Some(pair) => {
                let budget_remaining = s.view().budget_remaining;
                let (left_label, right_label) = (s.label(pair.left), s.label(pair.right));
                Json(QueryResponse { pair, left_label, right_label, budget_remaining }).into_response()
            }
            None => Json(json!({ "exhausted": true, "state": s.state })).into_response(),
        })
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    pub choice: Choice,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub budget_remaining: usize,
    pub state: SessionState,
    pub answered: usize,
}

async fn feedback(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> ApiResult<Json<FeedbackResponse>> {
    let Json(req) = body?;
    with_session(state, id, move |st, s| {
        let record = s.answer(req.choice)?;
        let entry = PreferenceLogEntry::new(&record, now());
        st.store.append(&s.header.session_id, &SessionEvent::Answer(entry)).map_err(ApiError::internal)?;
        let view = s.view();
        Ok(Json(FeedbackResponse { budget_remaining: view.budget_remaining, state: s.state, answered: view.preferences.len() }))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRequest {
    #[serde(default)]
    pub skip_remaining: bool,
}

async fn summary(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    // the body is optional
    let req: SummaryRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SummaryRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?
    };
    with_session(state, id, move |st, s| {
        let sid = s.header.session_id.clone();
        if req.skip_remaining && s.state == SessionState::Querying {
            s.skip()?;
            st.store.append(&sid, &SessionEvent::mark(Mark::Skip, now())).map_err(ApiError::internal)?;
        }
        let first = s.state != SessionState::Done;
        let selection = s.summary()?.clone();
        if first {
            st.store.append(&sid, &SessionEvent::mark(Mark::Summary, now())).map_err(ApiError::internal)?;
        }
        Ok(Json(selection).into_response())
    })
    .await
}
