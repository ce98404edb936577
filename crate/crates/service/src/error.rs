use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("no pending query")]
    NoPendingQuery,
    #[error("answer refers to question {got}, pending question is {expected}")]
    StaleAnswer { expected: u64, got: u64 },
    #[error("invalid answer: {0}")]
    InvalidAnswer(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("stored session is unreadable: {0}")]
    Corrupt(String),
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::NoPendingQuery | ServiceError::StaleAnswer { .. } => StatusCode::CONFLICT,
            ServiceError::InvalidAnswer(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Corrupt(_) | ServiceError::Io(_) | ServiceError::Internal(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}
