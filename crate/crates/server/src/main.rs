use std::io::IsTerminal;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use brain_server::{Brain, ConfigOverrides, ServerConfig};
use clap::Parser;
use tokio::net::TcpListener;
use tracing_subscriber::EnvFilter;

/// User-modeling backend for social robots.
#[derive(Parser, Debug)]
#[command(name = "brain-server", version, about)]
struct Args {
    /// TOML configuration file
    #[arg(long, env = "BRAIN_CONFIG")]
    config: Option<PathBuf>,

    /// Address to listen on
    #[arg(long, env = "BRAIN_LISTEN")]
    listen: Option<SocketAddr>,

    /// User store (newline-delimited JSON)
    #[arg(long, env = "BRAIN_STORE")]
    store: Option<PathBuf>,

    /// Question script (JSON)
    #[arg(long, env = "BRAIN_SCRIPT")]
    script: Option<PathBuf>,

    /// Adaptation rules (JSON)
    #[arg(long, env = "BRAIN_RULES")]
    rules: Option<PathBuf>,

    /// Attribute schema (JSON)
    #[arg(long, env = "BRAIN_SCHEMA")]
    schema: Option<PathBuf>,

    /// Maximum face-template distance accepted as a match
    #[arg(long, env = "BRAIN_FACE_THRESHOLD")]
    face_threshold: Option<f64>,

    /// Face template dimension
    #[arg(long, env = "BRAIN_TEMPLATE_DIM")]
    template_dim: Option<usize>,

    /// Seconds before an idle session is dropped
    #[arg(long, env = "BRAIN_SESSION_TIMEOUT")]
    session_timeout: Option<u64>,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("brain_server=info")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();

    match run(Args::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("brain-server: {e}");
            ExitCode::FAILURE
        }
    }
}

async fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let base = match &args.config {
        Some(path) => ServerConfig::from_file(path)?,
        None => ServerConfig::default(),
    };
    let config = base.apply(ConfigOverrides {
        listen: args.listen,
        store_path: args.store,
        script_path: args.script,
        rules_path: args.rules,
        schema_path: args.schema,
        face_threshold: args.face_threshold,
        template_dim: args.template_dim,
        session_timeout_secs: args.session_timeout,
    });

    let listener = TcpListener::bind(config.listen).await?;
    let brain = Arc::new(Brain::open(config)?);
    tracing::info!(addr = %listener.local_addr()?, "listening");
    brain_server::serve(brain, listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
