use axum::http::StatusCode;
use brain_core::dialogue::DialogueError;
use brain_core::perception::PerceptionError;
use brain_core::protocol::ProtocolError;
use brain_core::user_model::{ModelError, StoreError};
use brain_core::ConfigError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Files(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind listener: {0}")]
    Bind(#[from] std::io::Error),
}

/// Failure of a brain operation, mapped onto an HTTP status and a stable
/// machine-readable code.
#[derive(Debug, Error)]
pub enum BrainError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{0}")]
    Validation(String),
    #[error("unknown session `{0}`")]
    SessionNotFound(String),
    #[error("unknown user `{0}`")]
    UserNotFound(String),
    #[error("session `{0}` has already ended")]
    SessionEnded(String),
    #[error(transparent)]
    Dialogue(DialogueError),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl BrainError {
    pub fn status(&self) -> StatusCode {
        match self {
            BrainError::Protocol(_) | BrainError::Validation(_) => StatusCode::BAD_REQUEST,
            BrainError::SessionNotFound(_) | BrainError::UserNotFound(_) => StatusCode::NOT_FOUND,
            BrainError::SessionEnded(_) => StatusCode::CONFLICT,
            BrainError::Dialogue(e) => match e {
                DialogueError::SessionState(_) | DialogueError::ProtocolOrder { .. } => StatusCode::CONFLICT,
                DialogueError::InvalidText | DialogueError::Transcription(_) => {
                    StatusCode::UNPROCESSABLE_ENTITY
                }
                DialogueError::Model(_) => StatusCode::INTERNAL_SERVER_ERROR,
            },
            BrainError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            BrainError::Protocol(ProtocolError::Parse(_)) => "malformed_message",
            BrainError::Protocol(ProtocolError::Validation { .. }) | BrainError::Validation(_) => {
                "validation_error"
            }
            BrainError::Protocol(ProtocolError::Version(_)) => "unsupported_version",
            BrainError::SessionNotFound(_) => "session_not_found",
            BrainError::UserNotFound(_) => "user_not_found",
            BrainError::SessionEnded(_) => "session_ended",
            BrainError::Dialogue(e) => match e {
                DialogueError::SessionState(_) => "session_done",
                DialogueError::ProtocolOrder { .. } => "protocol_order",
                DialogueError::InvalidText => "invalid_text",
                DialogueError::Transcription(_) => "transcription_failed",
                DialogueError::Model(_) => "model_error",
            },
            BrainError::Storage(_) => "storage_error",
        }
    }
}

impl From<DialogueError> for BrainError {
    fn from(e: DialogueError) -> Self {
        BrainError::Dialogue(e)
    }
}

impl From<PerceptionError> for BrainError {
    fn from(e: PerceptionError) -> Self {
        BrainError::Validation(e.to_string())
    }
}

impl From<StoreError> for BrainError {
    fn from(e: StoreError) -> Self {
        BrainError::Storage(e.to_string())
    }
}

impl From<ModelError> for BrainError {
    fn from(e: ModelError) -> Self {
        BrainError::Dialogue(DialogueError::Model(e))
    }
}
