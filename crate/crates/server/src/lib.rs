//! HTTP service for the robot brain.
//!
//! | Method | Path                        | Request          | Response           |
//! |--------|-----------------------------|------------------|--------------------|
//! | POST   | `/v1/session`               | `SessionHello`   | `GreetingResponse` |
//! | GET    | `/v1/session/{id}/question` |                  | `QuestionMessage`  |
//! | POST   | `/v1/session/{id}/answer`   | `AnswerMessage`  | `AnswerAck`        |
//! | POST   | `/v1/session/{id}/frames`   | `FrameBatch`     | `Directive`        |
//! | POST   | `/v1/session/{id}/end`      |                  | `SessionSummary`   |
//! | GET    | `/v1/users/{id}`            |                  | `UserRecord`       |
//!
//! Bodies use the versioned JSON encoding from `brain_core::protocol`.
//! Errors carry an `ErrorBody` with a stable `code`.

pub mod brain;
pub mod config;
pub mod error;
pub mod http;

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use brain::Brain;
pub use config::{ConfigOverrides, ServerConfig};
pub use error::{BrainError, StartupError};

/// Serves `brain` on `listener` until `shutdown` resolves, reaping idle
/// sessions in the background.
pub async fn serve(
    brain: Arc<Brain>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let reaper = tokio::spawn(reap_loop(Arc::clone(&brain)));
    let result = axum::serve(listener, http::router(brain)).with_graceful_shutdown(shutdown).await;
    reaper.abort();
    result
}

async fn reap_loop(brain: Arc<Brain>) {
    let period =
        (brain.config().session_timeout() / 2).clamp(Duration::from_millis(100), Duration::from_secs(30));
    let mut ticker = tokio::time::interval(period);
    loop {
        ticker.tick().await;
        let reaped = brain.reap_idle(Instant::now());
        if reaped > 0 {
            tracing::info!(reaped, "reaped idle sessions");
        }
    }
}

/// A server running on the current tokio runtime.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub brain: Arc<Brain>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    /// Opens the brain and binds `config.listen` (port 0 picks a free port).
    pub async fn start(config: ServerConfig) -> Result<Self, StartupError> {
        let listener = TcpListener::bind(config.listen).await?;
        let addr = listener.local_addr()?;
        let brain = Arc::new(Brain::open(config)?);
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(serve(Arc::clone(&brain), listener, async {
            let _ = rx.await;
        }));
        Ok(Self { addr, brain, shutdown: Some(tx), task })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        (&mut self.task).await.unwrap_or(Ok(()))
    }
}
