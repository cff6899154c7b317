use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{what} `{id}` not found")]
    NotFound { what: &'static str, id: String },
    #[error("{0}")]
    Invalid(String),
    #[error("score {0} is outside 0..=4")]
    ScoreOutOfRange(i64),
    #[error("task `{0}` was already scored with different values")]
    Conflict(String),
    #[error("session `{0}` is complete")]
    SessionComplete(String),
    #[error("every task in the study has been scored by `{0}`")]
    NothingLeft(String),
    #[error("store: {0}")]
    Store(#[from] rusqlite::Error),
    #[error("store: {0}")]
    Corrupt(String),
}

impl ServiceError {
    pub fn not_found(what: &'static str, id: impl Into<String>) -> Self {
        ServiceError::NotFound {
            what,
            id: id.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound { .. } => "not_found",
            ServiceError::Invalid(_) => "invalid_request",
            ServiceError::ScoreOutOfRange(_) => "score_out_of_range",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::SessionComplete(_) => "session_complete",
            ServiceError::NothingLeft(_) => "nothing_left",
            ServiceError::Store(_) | ServiceError::Corrupt(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound { .. } => StatusCode::NOT_FOUND,
            ServiceError::Invalid(_) | ServiceError::ScoreOutOfRange(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Conflict(_)
            | ServiceError::SessionComplete(_)
            | ServiceError::NothingLeft(_) => StatusCode::CONFLICT,
            ServiceError::Store(_) | ServiceError::Corrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

pub fn error_body(code: &str, message: &str) -> serde_json::Value {
    json!({ "error": { "code": code, "message": message } })
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (
            self.status(),
            Json(error_body(self.code(), &self.to_string())),
        )
            .into_response()
    }
}
