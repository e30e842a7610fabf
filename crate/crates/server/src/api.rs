use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use ae_core::engine::UiDesign;
use ae_core::predictor::{Direction, PredictError, PredictResponse, WireCandidate};
use ae_core::session::{KeyEvent, Session, SessionConfig, SessionError, Snapshot, Suggestion};
use ae_core::tokenizer::TokenId;

use crate::{AppState, ModelHandle, SessionEntry};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub schema_version: u32,
    pub error: ErrorBody,
}

pub(crate) struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorResponse {
            schema_version: SCHEMA_VERSION,
            error: ErrorBody { code: self.code.to_string(), message: self.message },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<PredictError> for ApiError {
    fn from(e: PredictError) -> Self {
        let (status, code) = match &e {
            PredictError::ZeroK | PredictError::KTooLarge { .. } | PredictError::IdOutOfRange { .. } => {
                (StatusCode::BAD_REQUEST, "bad_request")
            }
            PredictError::Unsupported(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unsupported_direction"),
            PredictError::Network { .. } | PredictError::Malformed { .. } => (StatusCode::BAD_GATEWAY, "upstream"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "predictor"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::BadK(_) | SessionError::ControlChar(_) => Self::bad_request(e.to_string()),
            SessionError::DigitOutOfRange { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "digit_out_of_range", e.to_string())
            }
            SessionError::NothingToErase => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "nothing_to_erase", e.to_string()),
            SessionError::Predict(p) => p.into(),
            SessionError::Token(t) => Self::internal(t.to_string()),
        }
    }
}

type ApiResult<T> = Result<(StatusCode, Json<T>), ApiError>;

fn ok<T>(body: T) -> ApiResult<T> {
    Ok((StatusCode::OK, Json(body)))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub schema_version: u32,
    pub status: String,
    pub models: Vec<String>,
    pub default_model: String,
    pub sessions: usize,
}

pub(crate) async fn health(State(state): State<AppState>) -> ApiResult<HealthResponse> {
    let sessions = state.0.sessions.read().map_err(|_| ApiError::internal("session table poisoned"))?.len();
    ok(HealthResponse {
        schema_version: SCHEMA_VERSION,
        status: "ok".into(),
        models: state.model_tags(),
        default_model: state.0.default_model.clone(),
        sessions,
    })
}

fn model(state: &AppState, tag: Option<&str>) -> Result<(String, ModelHandle), ApiError> {
    let tag = tag.unwrap_or(&state.0.default_model);
    state
        .0
        .models
        .get(tag)
        .map(|m| (tag.to_string(), m.clone()))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_model", format!("no model `{tag}`")))
}

/// Body of `POST /v1/predict`. `context` is in model order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictBody {
    pub context: Vec<TokenId>,
    pub direction: Direction,
    pub k: usize,
    #[serde(default)]
    pub model_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictReply {
    pub schema_version: u32,
    pub candidates: Vec<WireCandidate>,
}

pub(crate) async fn predict(
    State(state): State<AppState>,
    body: Result<Json<PredictBody>, JsonRejection>,
) -> ApiResult<PredictReply> {
    let Json(body) = body?;
    let (_, m) = model(&state, body.model_tag.as_deref())?;
    let prediction = blocking(move || Ok(m.predictor.predict(&body.context, body.direction, body.k)?)).await?;
    ok(PredictReply { schema_version: SCHEMA_VERSION, candidates: PredictResponse::from(&prediction).candidates })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    /// `digit` (default) or `legacy`.
    #[serde(default)]
    pub design: Option<String>,
    #[serde(default)]
    pub direction: Option<Direction>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub model_tag: Option<String>,
    /// Starting text, committed without counting.
    #[serde(default)]
    pub seed_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReply {
    pub schema_version: u32,
    pub session_id: String,
    pub model_tag: String,
    #[serde(flatten)]
    pub snapshot: Snapshot,
}

fn reply(id: String, entry: &SessionEntry, m: &ModelHandle) -> Result<SessionReply, ApiError> {
    Ok(SessionReply {
        schema_version: SCHEMA_VERSION,
        session_id: id,
        model_tag: entry.model_tag.clone(),
        snapshot: entry.session.snapshot(&m.vocab)?,
    })
}

pub(crate) async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> ApiResult<SessionReply> {
    let Json(req) = body?;
    let design: UiDesign = match req.design.as_deref() {
        None => UiDesign::DigitKeys,
        Some(d) => d.parse().map_err(ApiError::bad_request)?,
    };
    let config = SessionConfig {
        design,
        direction: req.direction.unwrap_or(Direction::Forward),
        k: req.k.unwrap_or(ae_core::session::MAX_SESSION_K),
    };
    let (tag, m) = model(&state, req.model_tag.as_deref())?;
    let session = Session::new(config, &m.vocab, req.seed_text.as_deref())?;
    let entry = SessionEntry { model_tag: tag, session };
    let id = uuid::Uuid::new_v4().simple().to_string();
    let body = reply(id.clone(), &entry, &m)?;
    state
        .0
        .sessions
        .write()
        .map_err(|_| ApiError::internal("session table poisoned"))?
        .insert(id, Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(body)))
}

fn lookup(state: &AppState, id: &str) -> Result<(Arc<Mutex<SessionEntry>>, ModelHandle), ApiError> {
    let entry = state
        .0
        .sessions
        .read()
        .map_err(|_| ApiError::internal("session table poisoned"))?
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::unknown_session(id))?;
    let tag = entry.lock().map_err(|_| ApiError::internal("session poisoned"))?.model_tag.clone();
    let (_, m) = model(state, Some(&tag))?;
    Ok((entry, m))
}

pub(crate) async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionReply> {
    let (entry, m) = lookup(&state, &id)?;
    let guard = entry.lock().map_err(|_| ApiError::internal("session poisoned"))?;
    ok(reply(id, &guard, &m)?)
}

pub(crate) async fn post_event(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<KeyEvent>, JsonRejection>,
) -> ApiResult<SessionReply> {
    let (entry, m) = lookup(&state, &id)?;
    let Json(event) = body?;
    let body = blocking(move || {
        let mut guard = entry.lock().map_err(|_| ApiError::internal("session poisoned"))?;
        guard.session.apply(event, &m.predictor, &m.vocab)?;
        reply(id, &guard, &m)
    })
    .await?;
    ok(body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionsReply {
    pub schema_version: u32,
    pub session_id: String,
    pub direction: Direction,
    pub suggestions: Vec<Suggestion>,
}

pub(crate) async fn get_suggestions(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<SuggestionsReply> {
    let (entry, m) = lookup(&state, &id)?;
    let body = blocking(move || {
        let guard = entry.lock().map_err(|_| ApiError::internal("session poisoned"))?;
        let suggestions = guard.session.suggestions(&m.predictor, &m.vocab)?;
        Ok(SuggestionsReply {
            schema_version: SCHEMA_VERSION,
            session_id: id,
            direction: guard.session.direction(),
            suggestions,
        })
    })
    .await?;
    ok(body)
}

pub(crate) async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}
