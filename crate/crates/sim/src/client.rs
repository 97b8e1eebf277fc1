//! Blocking HTTP client for the brain service.

use std::time::Duration;

use brain_core::protocol::{
    decode_message, encode_message, AnswerAck, AnswerMessage, Directive, ErrorBody, FrameBatch,
    GreetingResponse, Message, ProtocolError, QuestionMessage, SessionHello, SessionSummary,
};
use brain_core::user_model::UserRecord;
use reqwest::blocking;
use reqwest::Method;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("cannot reach server: {0}")]
    Connection(#[from] reqwest::Error),
    #[error("bad response: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("server replied {status} {code}: {message}")]
    Server { status: u16, code: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct Client {
    http: blocking::Client,
    base: String,
}

impl Client {
    /// `server` is `host:port` or a full `http://` URL.
    pub fn new(server: &str) -> Result<Self, SimError> {
        let base = if server.contains("://") { server.to_string() } else { format!("http://{server}") };
        let http = blocking::Client::builder()
            .connect_timeout(Duration::from_secs(5))
            .timeout(Duration::from_secs(30))
            .build()?;
        Ok(Self { http, base: base.trim_end_matches('/').to_string() })
    }

    fn call<M: Message>(&self, method: Method, path: &str, body: Option<Vec<u8>>) -> Result<M, SimError> {
        let mut request = self.http.request(method, format!("{}{path}", self.base));
        if let Some(body) = body {
            request = request.header("content-type", "application/json").body(body);
        }
        let response = request.send()?;
        let status = response.status();
        let bytes = response.bytes()?;
        if status.is_success() {
            return Ok(decode_message(&bytes)?);
        }
        let (code, message) = match decode_message::<ErrorBody>(&bytes) {
            Ok(body) => (body.code, body.message),
            Err(_) => ("unknown".to_string(), String::from_utf8_lossy(&bytes).into_owned()),
        };
        Err(SimError::Server { status: status.as_u16(), code, message })
    }

    pub fn hello(&self, hello: &SessionHello) -> Result<GreetingResponse, SimError> {
        self.call(Method::POST, "/v1/session", Some(encode_message(hello)))
    }

    pub fn question(&self, session: &str) -> Result<QuestionMessage, SimError> {
        self.call(Method::GET, &format!("/v1/session/{session}/question"), None)
    }

    pub fn answer(&self, session: &str, answer: &AnswerMessage) -> Result<AnswerAck, SimError> {
        self.call(Method::POST, &format!("/v1/session/{session}/answer"), Some(encode_message(answer)))
    }

    pub fn frames(&self, session: &str, batch: &FrameBatch) -> Result<Directive, SimError> {
        self.call(Method::POST, &format!("/v1/session/{session}/frames"), Some(encode_message(batch)))
    }

    pub fn end(&self, session: &str) -> Result<SessionSummary, SimError> {
        self.call(Method::POST, &format!("/v1/session/{session}/end"), None)
    }

    pub fn user(&self, user: &str) -> Result<UserRecord, SimError> {
        self.call(Method::GET, &format!("/v1/users/{user}"), None)
    }
}
