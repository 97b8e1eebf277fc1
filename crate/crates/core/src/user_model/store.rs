//! Newline-delimited JSON persistence for user records.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::UserRecord;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access store file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("store file {path}, line {line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
}

/// All persisted user records, keyed by user id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserStore {
    users: BTreeMap<String, UserRecord>,
}

impl UserStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.get(user_id)
    }

    pub fn get_mut(&mut self, user_id: &str) -> Option<&mut UserRecord> {
        self.users.get_mut(user_id)
    }

    /// Inserts or replaces a record.
    pub fn put(&mut self, record: UserRecord) {
        self.users.insert(record.user_id().to_string(), record);
    }

    pub fn records(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.values()
    }

    pub fn into_records(self) -> impl Iterator<Item = UserRecord> {
        self.users.into_values()
    }

    /// Writes one record per line, ordered by user id. The file is replaced
    /// atomically through a sibling temporary file.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let io_err = |source| StoreError::Io { path: path.to_path_buf(), source };
        let tmp = tmp_path(path);
        {
            let file = File::create(&tmp).map_err(io_err)?;
            let mut out = BufWriter::new(file);
            for record in self.users.values() {
                let line = serde_json::to_string(record).expect("user records always serialize");
                writeln!(out, "{line}").map_err(io_err)?;
            }
            out.flush().map_err(io_err)?;
            out.get_ref().sync_all().map_err(io_err)?;
        }
        fs::rename(&tmp, path).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let io_err = |source| StoreError::Io { path: path.to_path_buf(), source };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut store = UserStore::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let corrupt =
                |reason: String| StoreError::Corrupt { path: path.to_path_buf(), line: line_no, reason };
            let line = line.map_err(|e| corrupt(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: UserRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
            record.validate().map_err(|e| corrupt(e.to_string()))?;
            if store.users.contains_key(record.user_id()) {
                return Err(corrupt(format!("duplicate user `{}`", record.user_id())));
            }
            store.put(record);
        }
        Ok(store)
    }

    /// Like [`UserStore::load`], but a missing file yields an empty store.
    pub fn load_or_default(path: &Path) -> Result<Self, StoreError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::new())
        }
    }
}

impl FromIterator<UserRecord> for UserStore {
    fn from_iter<T: IntoIterator<Item = UserRecord>>(iter: T) -> Self {
        let mut store = UserStore::new();
        for r in iter {
            store.put(r);
        }
        store
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}
