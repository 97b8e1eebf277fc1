use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use brain_core::protocol::{decode_message, encode_message, ErrorBody, Message};

use crate::brain::Brain;
use crate::error::BrainError;

pub fn router(brain: Arc<Brain>) -> Router {
    Router::new()
        .route("/v1/session", post(start_session))
        .route("/v1/session/{id}/question", get(next_question))
        .route("/v1/session/{id}/answer", post(post_answer))
        .route("/v1/session/{id}/frames", post(post_frames))
        .route("/v1/session/{id}/end", post(end_session))
        .route("/v1/users/{id}", get(get_user))
        .with_state(brain)
}

fn json<M: Message>(status: StatusCode, message: &M) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], encode_message(message)).into_response()
}

impl IntoResponse for BrainError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        json(status, &ErrorBody { code: self.code().to_string(), message: self.to_string() })
    }
}

fn reply<M: Message>(result: Result<M, BrainError>) -> Response {
    match result {
        Ok(m) => json(StatusCode::OK, &m),
        Err(e) => e.into_response(),
    }
}

async fn start_session(State(brain): State<Arc<Brain>>, body: Bytes) -> Response {
    reply(decode_message(&body).map_err(BrainError::from).and_then(|hello| brain.start_session(&hello)))
}

async fn next_question(State(brain): State<Arc<Brain>>, Path(id): Path<String>) -> Response {
    reply(brain.next_question(&id))
}

async fn post_answer(State(brain): State<Arc<Brain>>, Path(id): Path<String>, body: Bytes) -> Response {
    reply(decode_message(&body).map_err(BrainError::from).and_then(|a| brain.post_answer(&id, &a)))
}

async fn post_frames(State(brain): State<Arc<Brain>>, Path(id): Path<String>, body: Bytes) -> Response {
    reply(decode_message(&body).map_err(BrainError::from).and_then(|b| brain.post_frames(&id, &b)))
}

async fn end_session(State(brain): State<Arc<Brain>>, Path(id): Path<String>) -> Response {
    reply(brain.end_session(&id))
}

async fn get_user(State(brain): State<Arc<Brain>>, Path(id): Path<String>) -> Response {
    reply(brain.get_user(&id))
}
