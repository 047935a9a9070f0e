//! The submission payload: one [`ExtractedChat`] plus a schema version.
//!
//! The byte form produced by [`to_bytes`] is what participants preview and
//! what gets submitted. It is deterministic for a given chat.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ExtractedChat;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PayloadError {
    #[error("malformed payload: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0}")]
    UnsupportedVersion(u32),
    #[error("payload violates invariants: {0}")]
    Invalid(String),
}

#[derive(Serialize)]
struct PayloadRef<'a> {
    schema_version: u32,
    #[serde(flatten)]
    chat: &'a ExtractedChat,
}

#[derive(Deserialize)]
struct PayloadOwned {
    schema_version: u32,
    #[serde(flatten)]
    chat: ExtractedChat,
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_bytes(chat: &ExtractedChat) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&PayloadRef {
        schema_version: SCHEMA_VERSION,
        chat,
    })
    .expect("payload serialization is infallible");
    bytes.push(b'\n');
    bytes
}

/// Parses and validates a payload.
pub fn from_slice(bytes: &[u8]) -> Result<ExtractedChat, PayloadError> {
    let payload: PayloadOwned = serde_json::from_slice(bytes)?;
    if payload.schema_version != SCHEMA_VERSION {
        return Err(PayloadError::UnsupportedVersion(payload.schema_version));
    }
    payload.chat.validate().map_err(PayloadError::Invalid)?;
    Ok(payload.chat)
}
