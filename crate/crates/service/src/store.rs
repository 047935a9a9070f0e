//! On-disk session state.
//!
//! Only extracted chats, their review state and receipts are written. Raw
//! exports never reach this module.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ucds_core::extract::ExtractedChat;

use crate::session::{ChatState, SessionChat, SessionError};
use crate::submit::Receipt;

const FILE_NAME: &str = "session.json";
const STORE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredChat {
    state: ChatState,
    chat: ExtractedChat,
    receipt: Option<Receipt>,
}

#[derive(Serialize, Deserialize)]
struct StoredSession {
    version: u32,
    chats: Vec<StoredChat>,
}

/// Application directory holding `session.json`.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Store { dir: dir.into() }
    }

    /// `$UCDS_HOME`, else `$XDG_DATA_HOME/ucds`, else `~/.local/share/ucds`.
    pub fn default_dir() -> Option<PathBuf> {
        let env = |k: &str| std::env::var_os(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        env("UCDS_HOME")
            .or_else(|| env("XDG_DATA_HOME").map(|d| d.join("ucds")))
            .or_else(|| env("HOME").map(|h| h.join(".local/share/ucds")))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self) -> PathBuf {
        self.dir.join(FILE_NAME)
    }

    pub fn load(&self) -> Result<Vec<SessionChat>, SessionError> {
        let path = self.path();
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(SessionError::Io { path, source }),
        };
        let corrupt = |reason: String| SessionError::Corrupt {
            path: path.clone(),
            reason,
        };
        let stored: StoredSession = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if stored.version != STORE_VERSION {
            return Err(corrupt(format!("unsupported version {}", stored.version)));
        }
        stored
            .chats
            .into_iter()
            .map(|c| {
                c.chat.validate().map_err(&corrupt)?;
                Ok(SessionChat {
                    state: c.state,
                    chat: c.chat,
                    receipt: c.receipt,
                })
            })
            .collect()
    }

    /// Replaces the stored session atomically.
    pub fn save(&self, chats: &[SessionChat]) -> Result<(), SessionError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SessionError::Io { path, source }
        };
        std::fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let stored = StoredSession {
            version: STORE_VERSION,
            chats: chats
                .iter()
                .map(|c| StoredChat {
                    state: c.state,
                    chat: c.chat.clone(),
                    receipt: c.receipt.clone(),
                })
                .collect(),
        };
        let bytes = serde_json::to_vec_pretty(&stored).expect("session serialization is infallible");
        let path = self.path();
        let tmp = self.dir.join(format!(".{FILE_NAME}.tmp"));
        let mut file = std::fs::File::create(&tmp).map_err(io(&tmp))?;
        file.write_all(&bytes).and_then(|_| file.sync_all()).map_err(io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io(&path))
    }
}
