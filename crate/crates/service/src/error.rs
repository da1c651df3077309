use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use camscope_core::Error;
use serde::{Deserialize, Serialize};

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn no_model() -> Self {
        Self::new(StatusCode::CONFLICT, "no_model", "no model and dataset are loaded")
    }

    pub fn unknown_class(class: usize) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_class", format!("no class {class}"))
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }

    pub fn unknown_sample(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_sample", format!("no sample `{id}`"))
    }

    pub fn invalid_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
    }

    pub fn method_not_allowed() -> Self {
        Self::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this endpoint")
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let message = err.to_string();
        let (status, code) = match err.root() {
            Error::ClassOutOfRange { .. } => (StatusCode::NOT_FOUND, "unknown_class"),
            Error::EmptyClass(_) => (StatusCode::NOT_FOUND, "empty_class"),
            Error::FeatureOutOfRange { .. } => (StatusCode::NOT_FOUND, "feature_out_of_range"),
            Error::UnknownMethod(_) => (StatusCode::BAD_REQUEST, "unknown_method"),
            Error::InvalidRange { .. } => (StatusCode::BAD_REQUEST, "invalid_range"),
            Error::InvalidConfig(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            Error::EmptySelection => (StatusCode::UNPROCESSABLE_ENTITY, "empty_selection"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, "{}", self.message);
        }
        let body = ErrorBody { code: self.code.to_string(), message: self.message };
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
