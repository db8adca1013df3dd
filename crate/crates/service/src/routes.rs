use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use learncorp_core::corpus::parse_corpus;
use learncorp_core::exercise::remedial_items;
use learncorp_core::index::{build_index, CorpusIndex};
use learncorp_core::session::{start_session, SessionMode};
use serde::Serialize;

use crate::api::{
    run_exercise_request, run_query_request, run_stats_request, AnswerRequest, AnswerResponse, CorpusSummary,
    ExerciseRequest, ItemView, QueryRequest, SessionCreated, SessionRequest, StatsParams,
};
use crate::error::ApiError;
use crate::registry::{corpus_id, Registered, Registry};
use crate::store::SessionStore;

pub struct Shared {
    pub registry: RwLock<Registry>,
    /// One lock for all sessions: answers to a session are applied one at a
    /// time, and every change is persisted before the reply.
    pub sessions: Mutex<Box<dyn SessionStore>>,
}

pub type AppState = Arc<Shared>;

pub fn new_state(registry: Registry, sessions: Box<dyn SessionStore>) -> AppState {
    Arc::new(Shared {
        registry: RwLock::new(registry),
        sessions: Mutex::new(sessions),
    })
}

pub fn router(state: AppState, max_upload_bytes: usize) -> Router {
    Router::new()
        .route("/corpora", post(upload_corpus))
        .route("/corpora/{id}", get(corpus_summary))
        .route("/corpora/{id}/query", post(query))
        .route("/corpora/{id}/exercises", post(exercises))
        .route("/corpora/{id}/stats/errors", get(error_stats))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/answer", post(answer))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed here")
        })
        .layer(DefaultBodyLimit::max(max_upload_bytes))
        .with_state(state)
}

fn json<T: Serialize>(status: StatusCode, body: T) -> Response {
    (status, Json(body)).into_response()
}

fn body_error(status: StatusCode, message: String) -> ApiError {
    if status == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(status, "payload_too_large", message)
    } else {
        ApiError::bad_request(message)
    }
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v).map_err(|r| body_error(r.status(), r.body_text()))
}

fn corpus(state: &AppState, id: &str) -> Result<Arc<CorpusIndex>, ApiError> {
    state
        .registry
        .read()
        .map_err(|_| ApiError::internal("registry lock poisoned"))?
        .get(id)
        .ok_or_else(|| ApiError::corpus_not_found(id))
}

/// Runs CPU-bound work off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

async fn upload_corpus(State(state): State<AppState>, body: Result<Bytes, BytesRejection>) -> Result<Response, ApiError> {
    let bytes = body.map_err(|r| body_error(r.status(), r.body_text()))?;
    let (id, index) = blocking(move || {
        let corpus = parse_corpus(&bytes)?;
        let id = corpus_id(&corpus);
        Ok((id, build_index(Arc::new(corpus))))
    })
    .await?;
    let mut registry = state.registry.write().map_err(|_| ApiError::internal("registry lock poisoned"))?;
    let (outcome, index) = registry
        .insert(id.clone(), index)
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, "duplicate_corpus_name", e.to_string()))?;
    let status = match outcome {
        Registered::Created => {
            tracing::info!(%id, name = %index.corpus().name, "corpus registered");
            StatusCode::CREATED
        }
        Registered::Existing => StatusCode::OK,
    };
    Ok(json(status, CorpusSummary::new(&id, &index)))
}

async fn corpus_summary(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let index = corpus(&state, &id)?;
    Ok(json(StatusCode::OK, CorpusSummary::new(&id, &index)))
}

async fn query(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<QueryRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let index = corpus(&state, &id)?;
    let request = json_body(body)?;
    let response = blocking(move || run_query_request(&index, &request)).await?;
    Ok(json(StatusCode::OK, response))
}

async fn exercises(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ExerciseRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let index = corpus(&state, &id)?;
    let request = json_body(body)?;
    let set = blocking(move || run_exercise_request(&index, &request)).await?;
    Ok(json(StatusCode::OK, set))
}

async fn error_stats(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<StatsParams>, QueryRejection>,
) -> Result<Response, ApiError> {
    let index = corpus(&state, &id)?;
    let Query(params) = params.map_err(|r| ApiError::bad_request(r.body_text()))?;
    let stats = blocking(move || run_stats_request(&index, &params)).await?;
    Ok(json(StatusCode::OK, stats))
}

fn store_error(e: crate::store::StoreError) -> ApiError {
    ApiError::internal(e.to_string())
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<SessionRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let request = json_body(body)?;
    request.config.validate()?;
    let index = corpus(&state, &request.corpus_id)?;
    let session = blocking(move || {
        let set = run_exercise_request(&index, &request.exercise_request)?;
        let remedials = match request.config.mode {
            SessionMode::Branched => remedial_items(&index, &set.items, set.seed),
            SessionMode::Linear => Vec::new(),
        };
        Ok(start_session(set.items, remedials, request.config)?)
    })
    .await?;
    let first = session.current().ok_or_else(|| ApiError::internal("new session has no item"))?;
    let created = SessionCreated {
        session_id: uuid::Uuid::new_v4().simple().to_string(),
        item_count: session.items.len(),
        first_item: ItemView::from(&first),
    };
    state
        .sessions
        .lock()
        .map_err(|_| ApiError::internal("session lock poisoned"))?
        .put(&created.session_id, session)
        .map_err(store_error)?;
    Ok(json(StatusCode::CREATED, created))
}

async fn answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let request = json_body(body)?;
    let mut sessions = state.sessions.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
    let mut session = sessions.get(&id).ok_or_else(|| ApiError::session_not_found(&id))?;
    let feedback = session.submit_answer(&request.answer)?;
    sessions.put(&id, session).map_err(store_error)?;
    Ok(json(
        StatusCode::OK,
        AnswerResponse {
            correct: feedback.correct,
            next_item: feedback.next.as_ref().map(ItemView::from),
            report: feedback.report,
        },
    ))
}
