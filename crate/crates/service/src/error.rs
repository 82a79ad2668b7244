use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use storyexp_core::{ExtractError, GestureError, LayoutError, ModelError, PersistError};

/// An error response: status plus a stable name clients can match on.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub name: &'static str,
    pub message: String,
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, name: &'static str, message: impl Into<String>) -> Self {
        Self { status, name, message: message.into(), detail: None }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", what)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn stale(current: u64, base: u64) -> Self {
        Self::new(StatusCode::CONFLICT, "StaleVersion", format!("document is at version {current}, request was based on {base}"))
            .with_detail(json!({ "currentVersion": current, "baseVersion": base }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.name, "message": self.message });
        if let Some(d) = self.detail {
            body["detail"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let status = match &e {
            ModelError::UnknownEntity(_) | ModelError::UnknownFragment(_) | ModelError::UnknownAnnotation(_) => {
                StatusCode::NOT_FOUND
            }
            ModelError::DuplicateName { .. } | ModelError::EntityInUse(_) => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.name(), e.to_string())
    }
}

impl From<GestureError> for ApiError {
    fn from(e: GestureError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.name(), e.to_string())
    }
}

impl From<ExtractError> for ApiError {
    fn from(e: ExtractError) -> Self {
        let status = match e {
            ExtractError::ProviderUnavailable(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.name(), e.to_string())
    }
}

impl From<LayoutError> for ApiError {
    fn from(e: LayoutError) -> Self {
        match &e {
            LayoutError::OverlapConflict { entity, step, first, second } => {
                Self::new(StatusCode::CONFLICT, e.name(), e.to_string()).with_detail(json!({
                    "conflicts": [{ "entity": entity, "step": step, "fragments": [first, second] }]
                }))
            }
            LayoutError::InvalidParams(_) => Self::new(StatusCode::BAD_REQUEST, e.name(), e.to_string()),
        }
    }
}

impl From<PersistError> for ApiError {
    fn from(e: PersistError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.name(), e.to_string())
    }
}
