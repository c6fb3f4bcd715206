//! HTTP facade over [`App`]. Query, run and regenerate respond with
//! server-sent events; documents are returned in their canonical encoding.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use futures::StreamExt;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::app::{App, AppError, EventStream, QueryInput};
use crate::document::DocOp;
use crate::domain::{encode_fusion_document, DocumentId, FusionDocument, ModelId, SessionId, TurnId};
use crate::store::FeedbackInput;

pub const TURN_HEADER: &str = "x-turn-id";
pub const DOCUMENT_HEADER: &str = "x-document-id";

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: SessionId,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuseInput {
    #[serde(default)]
    pub models: Vec<ModelId>,
}

struct ApiError(AppError);

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = serde_json::to_string(&ErrorBody { error: self.0.to_string() }).expect("error body");
        (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes, required: bool) -> Result<T, ApiError> {
    if body.is_empty() && !required {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError(AppError::BadRequest(format!("invalid request body: {e}"))))
}

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

fn document_response(doc: &FusionDocument) -> Response {
    json_bytes(StatusCode::OK, encode_fusion_document(doc))
}

fn sse(events: EventStream) -> Response {
    let events = events.map(|ev| Ok::<_, Infallible>(Event::default().event(ev.name()).data(ev.data_json())));
    Sse::new(events).keep_alive(KeepAlive::default()).into_response()
}

async fn create_session(State(app): State<Arc<App>>) -> ApiResult {
    let id = app.create_session()?;
    let body = serde_json::to_vec(&SessionCreated { id }).expect("session body");
    Ok(json_bytes(StatusCode::CREATED, body))
}

async fn history(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult {
    let entries = app.history(&SessionId(id))?;
    Ok(json_bytes(StatusCode::OK, serde_json::to_vec(&entries).expect("history body")))
}

async fn query(State(app): State<Arc<App>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let input: QueryInput = parse_body(&body, true)?;
    let (turn, events) = app.submit_query(&SessionId(id), input).await?;
    let mut response = sse(events);
    if let Ok(v) = HeaderValue::from_str(turn.id.as_str()) {
        response.headers_mut().insert(TURN_HEADER, v);
    }
    Ok(response)
}

async fn turn(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult {
    let record = app.turn(&TurnId(id))?;
    Ok(json_bytes(StatusCode::OK, serde_json::to_vec(&record).expect("turn body")))
}

async fn fuse(State(app): State<Arc<App>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let input: FuseInput = parse_body(&body, false)?;
    let (doc_id, outcome) = app.fuse(&TurnId(id), &input.models).await?;
    let mut response = document_response(&outcome.document);
    if let Ok(v) = HeaderValue::from_str(doc_id.as_str()) {
        response.headers_mut().insert(DOCUMENT_HEADER, v);
    }
    Ok(response)
}

async fn document(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult {
    Ok(document_response(&app.document(&DocumentId(id))?))
}

async fn document_op(State(app): State<Arc<App>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let op: DocOp = serde_json::from_slice(&body)
        .map_err(|e| ApiError(AppError::BadRequest(format!("invalid request body: {e}"))))?;
    Ok(document_response(&app.apply_op(&DocumentId(id), op)?))
}

async fn export(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult {
    let text = app.export(&DocumentId(id))?;
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn feedback(State(app): State<Arc<App>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let input: FeedbackInput = serde_json::from_slice(&body)
        .map_err(|e| ApiError(AppError::BadRequest(format!("invalid request body: {e}"))))?;
    app.feedback(&TurnId(id), input)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

fn model_id(model: &str) -> Result<ModelId, ApiError> {
    ModelId::new(model).map_err(|e| ApiError(AppError::NotFound(e.to_string())))
}

async fn regenerate(State(app): State<Arc<App>>, Path((id, model)): Path<(String, String)>) -> ApiResult {
    Ok(sse(app.regenerate(&TurnId(id), &model_id(&model)?)?))
}

async fn run(State(app): State<Arc<App>>, Path((id, model)): Path<(String, String)>) -> ApiResult {
    Ok(sse(app.manual_trigger(&TurnId(id), &model_id(&model)?)?))
}

async fn table(State(app): State<Arc<App>>) -> ApiResult {
    Ok(json_bytes(StatusCode::OK, serde_json::to_vec(&app.performance_table()).expect("table body")))
}

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id/history", get(history))
        .route("/sessions/:id/query", post(query))
        .route("/turns/:id", get(turn))
        .route("/turns/:id/fuse", post(fuse))
        .route("/turns/:id/feedback", post(feedback))
        .route("/turns/:id/regenerate/:model", post(regenerate))
        .route("/turns/:id/run/:model", post(run))
        .route("/documents/:id", get(document))
        .route("/documents/:id/ops", post(document_op))
        .route("/documents/:id/export", get(export))
        .route("/performance", get(table))
        .with_state(app)
}

/// Serves until the listener fails.
pub async fn serve(app: Arc<App>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(app)).await
}
