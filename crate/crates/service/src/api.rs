use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::{error_body, ServiceError};
use crate::store::{Store, StudyConfig, StudyDocument};

pub const INSTRUCTIONS: &str = include_str!("../resources/instructions.txt");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateStudy {
    documents: Vec<StudyDocument>,
    #[serde(default)]
    config: StudyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenSession {
    evaluator_id: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitScores {
    scores: Vec<i64>,
}

type Shared = Arc<Store>;

/// Runs a store call off the async executor.
async fn blocking<T, F>(store: Shared, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&Store) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ServiceError::Corrupt(format!("worker failed: {e}")))?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::Invalid(e.body_text()))
}

async fn create_study(
    State(store): State<Shared>,
    payload: Result<Json<CreateStudy>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req = body(payload)?;
    let info = blocking(store, move |s| s.create_study(&req.documents, &req.config)).await?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn get_study(
    State(store): State<Shared>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    let info = blocking(store, move |s| s.study(&id)).await?;
    Ok(Json(info).into_response())
}

async fn open_session(
    State(store): State<Shared>,
    Path(id): Path<String>,
    payload: Result<Json<OpenSession>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req = body(payload)?;
    let (info, created) = blocking(store, move |s| s.open_session(&id, &req.evaluator_id)).await?;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(info)).into_response())
}

async fn next_task(
    State(store): State<Shared>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    let next = blocking(store, move |s| s.next_task(&id)).await?;
    Ok(Json(next).into_response())
}

async fn submit_scores(
    State(store): State<Shared>,
    Path((session, task)): Path<(String, String)>,
    payload: Result<Json<SubmitScores>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req = body(payload)?;
    let ack = blocking(store, move |s| {
        s.submit_scores(&session, &task, &req.scores)
    })
    .await?;
    Ok(Json(ack).into_response())
}

async fn export(
    State(store): State<Shared>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    let rows = blocking(store, move |s| s.export(&id)).await?;
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(&row).expect("rows serialize"));
        out.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response())
}

async fn instructions() -> impl IntoResponse {
    (
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        INSTRUCTIONS,
    )
}

async fn health() -> impl IntoResponse {
    Json(json!({ "status": "ok" }))
}

async fn fallback() -> impl IntoResponse {
    (
        StatusCode::NOT_FOUND,
        Json(error_body("not_found", "no such route")),
    )
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/studies", post(create_study))
        .route("/studies/{id}", get(get_study))
        .route("/studies/{id}/sessions", post(open_session))
        .route("/studies/{id}/export", get(export))
        .route("/sessions/{id}/next", get(next_task))
        .route("/sessions/{id}/tasks/{task_id}/scores", post(submit_scores))
        .route("/instructions", get(instructions))
        .route("/health", get(health))
        .fallback(fallback)
        .with_state(store)
}
