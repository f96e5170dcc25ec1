//! JSON-over-HTTP service consumed by the browser workbench.
//!
//! | method | path                              | success |
//! |--------|-----------------------------------|---------|
//! | POST   | `/api/sessions`                   | 201     |
//! | GET    | `/api/sessions`                   | 200     |
//! | GET    | `/api/sessions/{id}`              | 200     |
//! | POST   | `/api/sessions/{id}/selection`    | 200     |
//! | GET    | `/api/sessions/{id}/report`       | 200     |
//! | POST   | `/api/substitutions`              | 200     |
//!
//! Errors are `{"code": "...", "message": "..."}` with a 4xx/5xx status.

use std::collections::HashSet;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::cors::CorsLayer;
use transpec_core::{parse_spec_value, PromptStrategy, ReportFormat, SourceSegment, SpecError};

use crate::pipeline::{ErrorClass, Pipeline, PipelineError, ReferenceInput, SessionRequest};
use crate::store::SessionRecord;

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self { status: status.as_u16(), code: code.into(), message: message.into() }
    }
}

pub fn http_status(class: ErrorClass) -> StatusCode {
    match class {
        ErrorClass::Validation => StatusCode::BAD_REQUEST,
        ErrorClass::UnknownLabel => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorClass::NotFound => StatusCode::NOT_FOUND,
        ErrorClass::Provider => StatusCode::BAD_GATEWAY,
        ErrorClass::Persistence => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        Self::new(http_status(e.class()), e.code(), e.to_string())
    }
}

impl From<SpecError> for ApiError {
    fn from(e: SpecError) -> Self {
        PipelineError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, axum::Json(self)).into_response()
    }
}

/// `axum::Json` with rejections mapped onto [`ApiError`].
pub struct Json<T>(pub T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequest<S> for Json<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Self(v)),
            Err(rejection) => {
                Err(ApiError::new(StatusCode::BAD_REQUEST, "request.invalid", rejection_message(&rejection)))
            }
        }
    }
}

fn rejection_message(r: &JsonRejection) -> String {
    r.body_text()
}

#[derive(Clone)]
pub struct AppState {
    pipeline: Arc<Pipeline>,
    in_flight: Arc<Mutex<HashSet<String>>>,
}

impl AppState {
    pub fn new(pipeline: Pipeline) -> Self {
        Self { pipeline: Arc::new(pipeline), in_flight: Arc::default() }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session).get(list_sessions))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/selection", post(select))
        .route("/api/sessions/{id}/report", get(get_report))
        .route("/api/substitutions", post(substitutions))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SegmentInput {
    Text(String),
    Full { text: String, id: Option<String> },
}

fn default_n() -> usize {
    3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub spec: Value,
    pub segment: SegmentInput,
    #[serde(default)]
    pub strategy: Option<PromptStrategy>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub references: Vec<ReferenceInput>,
}

#[derive(Debug, Default, Deserialize)]
pub struct IncludeQuery {
    include: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct FormatQuery {
    format: Option<String>,
}

fn project(record: &SessionRecord, include_raw: bool) -> Value {
    let mut v = serde_json::to_value(record).unwrap_or(Value::Null);
    if !include_raw {
        if let Value::Object(map) = &mut v {
            map.remove("raw_response");
        }
    }
    v
}

fn wants_raw(q: &IncludeQuery) -> bool {
    q.include.as_deref().is_some_and(|s| s.split(',').any(|p| p.trim() == "raw"))
}

/// Removes its key from the in-flight set when dropped.
struct Reservation {
    key: String,
    set: Arc<Mutex<HashSet<String>>>,
}

impl Drop for Reservation {
    fn drop(&mut self) {
        if let Ok(mut set) = self.set.lock() {
            set.remove(&self.key);
        }
    }
}

fn duplicate(key: &str, existing: Option<&str>) -> ApiError {
    let message = match existing {
        Some(id) => format!("idempotency key {key:?} already used by session {id}"),
        None => format!("a request with idempotency key {key:?} is already in progress"),
    };
    ApiError::new(StatusCode::CONFLICT, "session.duplicate_idempotency_key", message)
}

async fn create_session(
    State(state): State<AppState>,
    Query(q): Query<IncludeQuery>,
    headers: HeaderMap,
    Json(body): Json<CreateSession>,
) -> Result<(StatusCode, axum::Json<Value>), ApiError> {
    let spec = parse_spec_value(&body.spec)?;
    let segment = match body.segment {
        SegmentInput::Text(text) => SourceSegment::new("seg-1", text)?,
        SegmentInput::Full { text, id } => SourceSegment::new(id.unwrap_or_else(|| "seg-1".into()), text)?,
    };
    let strategy = body.strategy.unwrap_or(PromptStrategy::SpecConditioned);

    let key = match headers.get(IDEMPOTENCY_HEADER) {
        None => None,
        Some(v) => match v.to_str().map(str::trim) {
            Ok(k) if !k.is_empty() => Some(k.to_owned()),
            _ => {
                return Err(ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "request.invalid",
                    "Idempotency-Key must be non-empty visible ASCII",
                ))
            }
        },
    };
    let _reservation = match &key {
        None => None,
        Some(k) => {
            if !state.in_flight.lock().map_err(|_| poisoned())?.insert(k.clone()) {
                return Err(duplicate(k, None));
            }
            let reservation = Reservation { key: k.clone(), set: state.in_flight.clone() };
            if let Some(id) = state.pipeline.store().find_by_idempotency_key(k).map_err(PipelineError::from)? {
                return Err(duplicate(k, Some(&id)));
            }
            Some(reservation)
        }
    };

    let record = state
        .pipeline
        .run_session(SessionRequest {
            spec,
            segment,
            strategy,
            n: body.n,
            references: body.references,
            idempotency_key: key,
        })
        .await?;
    Ok((StatusCode::CREATED, axum::Json(project(&record, wants_raw(&q)))))
}

fn poisoned() -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store.io", "internal lock poisoned")
}

async fn list_sessions(State(state): State<AppState>) -> Result<axum::Json<Value>, ApiError> {
    let entries = state.pipeline.store().list().map_err(PipelineError::from)?;
    Ok(axum::Json(serde_json::to_value(entries).unwrap_or(Value::Null)))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<IncludeQuery>,
) -> Result<axum::Json<Value>, ApiError> {
    let record = state.pipeline.store().load(&id).map_err(PipelineError::from)?;
    Ok(axum::Json(project(&record, wants_raw(&q))))
}

async fn get_report(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, ApiError> {
    let format = match q.format.as_deref() {
        None => ReportFormat::Json,
        Some(f) => f
            .parse::<ReportFormat>()
            .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "request.invalid", format!("unknown format {f:?}")))?,
    };
    let record = state.pipeline.store().load(&id).map_err(PipelineError::from)?;
    Ok(match format {
        ReportFormat::Json => axum::Json(record.report).into_response(),
        ReportFormat::Table => state.pipeline.emit_report(&id, format)?.into_response(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectBody {
    pub label: String,
    #[serde(default)]
    pub edited_text: Option<String>,
}

async fn select(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<SelectBody>,
) -> Result<axum::Json<Value>, ApiError> {
    let pipeline = state.pipeline.clone();
    let record = tokio::task::spawn_blocking(move || pipeline.record_selection(&id, &body.label, body.edited_text))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store.io", e.to_string()))??;
    Ok(axum::Json(project(&record, false)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstitutionBody {
    pub frame: String,
    pub entities: Vec<String>,
    pub source: String,
}

async fn substitutions(
    State(state): State<AppState>,
    Json(body): Json<SubstitutionBody>,
) -> Result<axum::Json<Value>, ApiError> {
    let report = state.pipeline.substitution_analysis(&body.frame, &body.entities, &body.source).await?;
    Ok(axum::Json(serde_json::to_value(report).unwrap_or(Value::Null)))
}
