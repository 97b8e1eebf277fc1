//! In-process server plus helpers for driving the `simulate` binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use brain_core::user_model::UserStore;
use brain_server::{RunningServer, ServerConfig};
use tokio::runtime::Runtime;

pub struct Harness {
    rt: Runtime,
    server: Option<RunningServer>,
    store: PathBuf,
    _dir: tempfile::TempDir,
}

impl Harness {
    /// Starts a server on a free port with an empty store.
    pub fn new() -> Self {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = dir.path().join("users.jsonl");
        let mut h = Self { rt, server: None, store, _dir: dir };
        h.start();
        h
    }

    fn start(&mut self) {
        let config = ServerConfig {
            listen: "127.0.0.1:0".parse().unwrap(),
            store_path: self.store.clone(),
            ..ServerConfig::default()
        };
        self.server = Some(self.rt.block_on(RunningServer::start(config)).unwrap());
    }

    pub fn stop(&mut self) {
        if let Some(server) = self.server.take() {
            self.rt.block_on(server.stop()).unwrap();
        }
    }

    /// Stops the server and starts a fresh process-equivalent on the same store.
    pub fn restart(&mut self) {
        self.stop();
        self.start();
    }

    pub fn server(&self) -> &RunningServer {
        self.server.as_ref().expect("server running")
    }

    pub fn addr(&self) -> String {
        self.server().addr.to_string()
    }

    pub fn store_path(&self) -> &Path {
        &self.store
    }

    pub fn store(&self) -> UserStore {
        UserStore::load(&self.store).unwrap()
    }

    /// Runs `simulate scripted <scenario>` against this server.
    pub fn scripted(&self, scenario: &Path, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_simulate"))
            .arg("scripted")
            .arg(scenario)
            .args(["--server", &self.addr()])
            .args(extra)
            .env_remove("BRAIN_SERVER")
            .output()
            .unwrap()
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn simulate(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate")).args(args).env_remove("BRAIN_SERVER").output().unwrap()
}

pub fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn scenario(name: &str) -> PathBuf {
    scenarios().join(format!("{name}.json"))
}

pub fn golden(name: &str) -> String {
    std::fs::read_to_string(scenarios().join(format!("{name}.txt"))).unwrap()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}
