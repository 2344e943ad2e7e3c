//! File-backed account records: one JSON file per account under
//! `<data_dir>/accounts/`, replaced atomically on every write.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auth::{self, AuthError, Consequence, LockoutState, Registration, Verdict};
use crate::grid::Move;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: corrupt record: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("invalid account id {0:?}")]
    InvalidId(String),
}

/// Closed session kept for audit. The initial grid is not stored; it is
/// re-derived from the registration and `seed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub session_id: String,
    pub seed: u64,
    pub transcript: Vec<Move>,
    pub consequence: Consequence,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountRecord {
    pub account_id: String,
    pub registration: Option<Registration>,
    pub lockout: LockoutState,
    pub face_index_path: Option<PathBuf>,
    #[serde(default)]
    pub audit: Vec<AuditEntry>,
}

impl AccountRecord {
    pub fn new(account_id: impl Into<String>) -> Self {
        Self {
            account_id: account_id.into(),
            registration: None,
            lockout: LockoutState::default(),
            face_index_path: None,
            audit: Vec::new(),
        }
    }
}

/// Recomputes the verdict of an audited session from the registration alone.
pub fn audit_replay(reg: &Registration, entry: &AuditEntry) -> Result<Verdict, AuthError> {
    let (seed, initial) = auth::derive_initial_grid(reg, entry.seed)?;
    debug_assert_eq!(seed, entry.seed, "stored seeds are already re-derived");
    auth::verify(&initial, &entry.transcript, &reg.secret)
}

/// Ids double as file names: 1 to 64 ASCII letters, digits, `-` or `_`.
pub fn validate_account_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    accounts_dir: PathBuf,
}

impl Store {
    pub fn open(data_dir: &Path) -> Result<Self, StoreError> {
        let accounts_dir = data_dir.join("accounts");
        fs::create_dir_all(&accounts_dir).map_err(|source| StoreError::Io {
            path: accounts_dir.clone(),
            source,
        })?;
        Ok(Self { accounts_dir })
    }

    pub fn record_path(&self, account_id: &str) -> PathBuf {
        self.accounts_dir.join(format!("{account_id}.json"))
    }

    pub fn load(&self, account_id: &str) -> Result<Option<AccountRecord>, StoreError> {
        validate_account_id(account_id)?;
        let path = self.record_path(account_id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| StoreError::Corrupt {
                path,
                message: e.to_string(),
            })
    }

    pub fn persist(&self, record: &AccountRecord) -> Result<(), StoreError> {
        self.persist_with(record, |_| Ok(()))
    }

    /// Writes `<id>.json.tmp`, syncs it, runs `before_rename`, then renames
    /// over `<id>.json`. If anything fails the temp file is removed and the
    /// previous record is left untouched.
    pub fn persist_with(
        &self,
        record: &AccountRecord,
        before_rename: impl FnOnce(&Path) -> io::Result<()>,
    ) -> Result<(), StoreError> {
        validate_account_id(&record.account_id)?;
        let path = self.record_path(&record.account_id);
        let tmp = path.with_extension("json.tmp");
        let json = serde_json::to_vec_pretty(record).expect("record serializes");
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&json)?;
            f.sync_all()?;
            drop(f);
            before_rename(&tmp)?;
            fs::rename(&tmp, &path)
        })();
        result.map_err(|source| {
            let _ = fs::remove_file(&tmp);
            StoreError::Io { path, source }
        })
    }

    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let read = fs::read_dir(&self.accounts_dir).map_err(|source| StoreError::Io {
            path: self.accounts_dir.clone(),
            source,
        })?;
        let mut ids: Vec<String> = read
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_suffix(".json").map(str::to_string)
            })
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Administrative reset of an account's lockout.
    pub fn unlock(&self, account_id: &str) -> Result<AccountRecord, StoreError> {
        let mut record = self.load(account_id)?.ok_or_else(|| StoreError::Io {
            path: self.record_path(account_id),
            source: io::Error::new(io::ErrorKind::NotFound, "no such account"),
        })?;
        record.lockout.reset();
        self.persist(&record)?;
        Ok(record)
    }
}
