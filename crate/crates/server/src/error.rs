use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use irsim_core::orders::Violation;
use irsim_core::{EngineError, ReplayError};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("this token holds no seat allowed to do that")]
    NotYourSeat,
    #[error("phase violation: {0}")]
    PhaseViolation(String),
    #[error("orders failed validation ({} violations)", .0.len())]
    ValidationFailed(Vec<Violation>),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("session storage: {0}")]
    Storage(#[from] ReplayError),
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Storage(ReplayError::Io(e))
    }
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownSession(_) => "UnknownSession",
            SessionError::NotYourSeat => "NotYourSeat",
            SessionError::PhaseViolation(_) => "PhaseViolation",
            SessionError::ValidationFailed(_) => "ValidationFailed",
            SessionError::BadRequest(_) => "BadRequest",
            SessionError::Engine(_) => "EngineError",
            SessionError::Storage(_) => "StorageError",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            SessionError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SessionError::NotYourSeat => StatusCode::FORBIDDEN,
            SessionError::PhaseViolation(_) => StatusCode::CONFLICT,
            SessionError::ValidationFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::BadRequest(_) => StatusCode::BAD_REQUEST,
            SessionError::Engine(_) | SessionError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> serde_json::Value {
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        if let SessionError::ValidationFailed(v) = self {
            body["violations"] = json!(v);
        }
        body
    }
}

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}
