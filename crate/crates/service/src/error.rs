use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use learncorp_core::error::{ArgumentError, CorpusError, QueryError, QueryErrorKind, SessionError};
use serde::{Deserialize, Serialize};

/// Where in the input a failure was found.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentence: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

/// A failed request: an HTTP status and the JSON body sent with it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                location: None,
            },
        }
    }

    fn at(mut self, location: Location) -> Self {
        self.body.location = Some(location);
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn corpus_not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "corpus_not_found", format!("no corpus with id {id:?}"))
    }

    pub fn session_not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session with id {id:?}"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.status.as_u16(), self.body.code, self.body.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<CorpusError> for ApiError {
    fn from(e: CorpusError) -> Self {
        let message = e.to_string();
        let location = match e {
            CorpusError::Syntax { line, .. } => Location {
                line: Some(line),
                ..Default::default()
            },
            CorpusError::Schema {
                line, text_id, sentence, ..
            } => Location {
                line: Some(line),
                text_id,
                sentence,
                ..Default::default()
            },
            CorpusError::Validation { text_id, sentence, .. } => Location {
                text_id: Some(text_id),
                sentence,
                ..Default::default()
            },
        };
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_corpus", message).at(location)
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let (status, code) = match e.kind {
            QueryErrorKind::Syntax => (StatusCode::BAD_REQUEST, "query_syntax"),
            QueryErrorKind::Invalid => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_query"),
        };
        let err = ApiError::new(status, code, e.message);
        if e.column > 0 {
            err.at(Location {
                column: Some(e.column),
                ..Default::default()
            })
        } else {
            err
        }
    }
}

impl From<ArgumentError> for ApiError {
    fn from(e: ArgumentError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_argument", e.0)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match e {
            SessionError::NoItems => (StatusCode::UNPROCESSABLE_ENTITY, "no_examples"),
            SessionError::Config(_) => (StatusCode::BAD_REQUEST, "invalid_session_config"),
            SessionError::Finished => (StatusCode::CONFLICT, "session_finished"),
        };
        ApiError::new(status, code, e.to_string())
    }
}
