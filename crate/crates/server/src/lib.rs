//! JSON-over-HTTP front end for predictors and live autocomplete sessions.
//!
//! Routes (all responses carry `"schema_version": 1`):
//!
//! | method | path | |
//! |---|---|---|
//! | `POST` | `/v1/sessions` | create a session |
//! | `GET` | `/v1/sessions/{id}` | snapshot |
//! | `POST` | `/v1/sessions/{id}/events` | apply one key event |
//! | `GET` | `/v1/sessions/{id}/suggestions` | current suggestions |
//! | `POST` | `/v1/predict` | stateless top-k query |
//! | `GET` | `/v1/health` | liveness and loaded models |

mod api;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;

use ae_core::predictor::Predictor;
use ae_core::session::Session;
use ae_core::tokenizer::Vocabulary;

pub use api::{
    CreateSessionRequest, ErrorBody, ErrorResponse, HealthResponse, PredictBody, PredictReply, SessionReply,
    SuggestionsReply, SCHEMA_VERSION,
};

/// A predictor and the vocabulary its ids refer to.
#[derive(Clone)]
pub struct ModelHandle {
    pub vocab: Arc<Vocabulary>,
    pub predictor: Arc<dyn Predictor>,
}

impl ModelHandle {
    pub fn new<P: Predictor + 'static>(vocab: Vocabulary, predictor: P) -> Self {
        Self { vocab: Arc::new(vocab), predictor: Arc::new(predictor) }
    }
}

pub(crate) struct SessionEntry {
    pub(crate) model_tag: String,
    pub(crate) session: Session,
}

pub(crate) struct Inner {
    pub(crate) models: BTreeMap<String, ModelHandle>,
    pub(crate) default_model: String,
    pub(crate) sessions: RwLock<HashMap<String, Arc<Mutex<SessionEntry>>>>,
}

/// Shared server state. Cheap to clone.
#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

impl AppState {
    /// The first model is the default for requests that name none.
    ///
    /// Panics if `models` is empty.
    pub fn new(models: Vec<(String, ModelHandle)>) -> Self {
        let default_model = models.first().expect("at least one model").0.clone();
        Self(Arc::new(Inner {
            models: models.into_iter().collect(),
            default_model,
            sessions: RwLock::default(),
        }))
    }

    pub fn model_tags(&self) -> Vec<String> {
        self.0.models.keys().cloned().collect()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(api::health))
        .route("/v1/predict", post(api::predict))
        .route("/v1/sessions", post(api::create_session))
        .route("/v1/sessions/{id}", get(api::get_session))
        .route("/v1/sessions/{id}/events", post(api::post_event))
        .route("/v1/sessions/{id}/suggestions", get(api::get_suggestions))
        .fallback(api::not_found)
        .with_state(state)
}

/// Serves until the process ends.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds `addr` and serves on a fresh multi-threaded runtime, blocking the caller.
pub fn run_blocking(addr: SocketAddr, state: AppState, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = TcpListener::bind(addr).await?;
        on_bound(listener.local_addr()?);
        serve(listener, state).await
    })
}
