//! Delivering approved payloads.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::header::CONTENT_TYPE;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Where a payload goes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Target {
    /// A file path. An existing directory receives `<chat_id>.json`.
    File(PathBuf),
    /// An `http(s)://` endpoint that accepts the payload as a JSON POST body.
    Http(String),
}

impl Target {
    /// URLs starting with `http://` or `https://` are endpoints, anything
    /// else is a path.
    pub fn parse(s: &str) -> Result<Target, String> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty target".into());
        }
        let lower = s.to_ascii_lowercase();
        if lower.starts_with("http://") || lower.starts_with("https://") {
            let url = url_checked(s)?;
            Ok(Target::Http(url))
        } else {
            Ok(Target::File(PathBuf::from(s)))
        }
    }
}

fn url_checked(s: &str) -> Result<String, String> {
    reqwest::Url::parse(s).map(|u| u.to_string()).map_err(|e| format!("bad target url {s:?}: {e}"))
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::File(p) => write!(f, "{}", p.display()),
            Target::Http(u) => f.write_str(u),
        }
    }
}

impl From<Target> for String {
    fn from(t: Target) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for Target {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Target::parse(&s)
    }
}

/// Proof of a completed submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub chat_id: String,
    pub chat_label: String,
    pub targets: Vec<String>,
    pub bytes: usize,
    /// Hex SHA-256 of the submitted bytes.
    pub sha256: String,
}

impl Receipt {
    pub fn new(chat_id: &str, chat_label: &str, targets: &[Target], payload: &[u8]) -> Self {
        Receipt {
            chat_id: chat_id.to_string(),
            chat_label: chat_label.to_string(),
            targets: targets.iter().map(Target::to_string).collect(),
            bytes: payload.len(),
            sha256: hex::encode(Sha256::digest(payload)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryError {
    pub target: String,
    pub reason: String,
}

/// Sends payload bytes to targets, verbatim.
pub struct Dispatcher {
    client: Client,
}

impl Dispatcher {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

    pub fn new(timeout: Duration) -> Self {
        let client = Client::builder()
            .timeout(timeout)
            .user_agent(concat!("ucds/", env!("CARGO_PKG_VERSION")))
            .build()
            .expect("http client with static settings");
        Dispatcher { client }
    }

    pub fn deliver(&self, target: &Target, chat_id: &str, payload: &[u8]) -> Result<(), DeliveryError> {
        let fail = |reason: String| DeliveryError {
            target: target.to_string(),
            reason,
        };
        match target {
            Target::File(path) => write_file(path, chat_id, payload).map_err(|e| fail(e.to_string())),
            Target::Http(url) => {
                let resp = self
                    .client
                    .post(url)
                    .header(CONTENT_TYPE, "application/json")
                    .body(payload.to_vec())
                    .send()
                    .map_err(|e| fail(e.to_string()))?;
                if resp.status().is_success() {
                    Ok(())
                } else {
                    Err(fail(format!("server answered {}", resp.status())))
                }
            }
        }
    }
}

impl Default for Dispatcher {
    fn default() -> Self {
        Dispatcher::new(Self::DEFAULT_TIMEOUT)
    }
}

fn write_file(path: &Path, chat_id: &str, payload: &[u8]) -> std::io::Result<()> {
    let path = if path.is_dir() {
        path.join(format!("{chat_id}.json"))
    } else {
        path.to_path_buf()
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, payload)
}
