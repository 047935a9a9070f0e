//! The participant's review session: imported chats, their review state and
//! submission.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ucds_core::anonymize::chat_label;
use ucds_core::export::{ExportParser, ParseWarning};
use ucds_core::extract::EditError;
use ucds_core::urls::UrlDiagnostics;
use ucds_core::{payload, process_export, ExtractedChat, PipelineError, RawExport, UrlPipeline, UrlRecord};

use crate::store::Store;
use crate::submit::{DeliveryError, Dispatcher, Receipt, Target};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("export is {size} bytes, over the {limit}-byte limit")]
    Oversized { size: u64, limit: u64 },
    #[error("unknown chat {0:?}")]
    UnknownChat(String),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error("chat {0} has already been submitted")]
    AlreadySubmitted(String),
    #[error("chat {0} is being submitted")]
    SubmissionInProgress(String),
    #[error("no submission target selected")]
    NoTargets,
    #[error("target {target} unreachable: {reason}")]
    TargetUnreachable { target: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("session file {path} is unreadable: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

impl From<DeliveryError> for SessionError {
    fn from(e: DeliveryError) -> Self {
        SessionError::TargetUnreachable {
            target: e.target,
            reason: e.reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatState {
    Imported,
    Reviewed,
    Submitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionChat {
    pub state: ChatState,
    pub chat: ExtractedChat,
    pub receipt: Option<Receipt>,
}

/// One row of the chat list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChatSummary {
    pub chat_id: String,
    pub chat_label: String,
    pub state: ChatState,
    pub edited: bool,
    pub num_users: usize,
    pub messages: usize,
    pub url_messages: usize,
    pub urls: usize,
    pub start_date: String,
    pub end_date: String,
}

impl ChatSummary {
    fn of(c: &SessionChat) -> Self {
        ChatSummary {
            chat_id: c.chat.chat_id.to_string(),
            chat_label: c.chat.chat_label.clone(),
            state: c.state,
            edited: c.chat.edited,
            num_users: c.chat.num_users,
            messages: c.chat.messages.len(),
            url_messages: c.chat.url_message_count(),
            urls: c.chat.urls.len(),
            start_date: c.chat.start_date.to_string(),
            end_date: c.chat.end_date.to_string(),
        }
    }
}

/// What the participant learns about an import. Diagnostics are local only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportReport {
    pub chat_id: String,
    pub chat_label: String,
    pub warnings: Vec<String>,
    pub unparseable_urls: usize,
    pub degraded_urls: usize,
}

/// An extraction waiting to join a session.
#[derive(Debug)]
pub struct Imported {
    chat: ExtractedChat,
    warnings: Vec<ParseWarning>,
    diagnostics: UrlDiagnostics,
}

/// Turns raw exports into extracted chats. Holds no session state, so it can
/// run without the session lock.
pub struct Importer {
    parser: ExportParser,
    pipeline: Arc<UrlPipeline>,
    max_bytes: u64,
}

impl Importer {
    pub const DEFAULT_MAX_BYTES: u64 = 50 * 1024 * 1024;

    pub fn new(pipeline: Arc<UrlPipeline>) -> Self {
        Importer {
            parser: ExportParser::default(),
            pipeline,
            max_bytes: Self::DEFAULT_MAX_BYTES,
        }
    }

    pub fn with_max_bytes(mut self, max_bytes: u64) -> Self {
        self.max_bytes = max_bytes;
        self
    }

    pub fn max_bytes(&self) -> u64 {
        self.max_bytes
    }

    fn check_size(&self, size: u64) -> Result<(), SessionError> {
        if size > self.max_bytes {
            return Err(SessionError::Oversized {
                size,
                limit: self.max_bytes,
            });
        }
        Ok(())
    }

    pub fn import_file(&self, path: &Path) -> Result<Imported, SessionError> {
        let io = |source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        };
        self.check_size(std::fs::metadata(path).map_err(io)?.len())?;
        let raw = RawExport::read(path).map_err(io)?;
        self.process(&raw)
    }

    pub fn import_bytes(&self, bytes: &[u8], source_name: &str) -> Result<Imported, SessionError> {
        self.check_size(bytes.len() as u64)?;
        self.process(&RawExport::from_bytes(bytes, source_name))
    }

    fn process(&self, raw: &RawExport) -> Result<Imported, SessionError> {
        // The label is assigned when the chat joins the session.
        let (extraction, warnings) = process_export(raw, &self.parser, &self.pipeline, "")?;
        Ok(Imported {
            chat: extraction.chat,
            warnings,
            diagnostics: extraction.diagnostics,
        })
    }
}

/// Bytes handed out for delivery by [`ReviewSession::begin_submit`].
#[derive(Debug)]
pub struct PendingSubmission {
    pub chat_id: String,
    pub chat_label: String,
    pub targets: Vec<Target>,
    pub payload: Vec<u8>,
}

/// All chats of one participant. Every mutation is written through to the
/// store, if any, before it becomes visible.
#[derive(Debug, Default)]
pub struct ReviewSession {
    chats: Vec<SessionChat>,
    in_flight: HashSet<String>,
    store: Option<Store>,
}

impl ReviewSession {
    pub fn in_memory() -> Self {
        ReviewSession::default()
    }

    pub fn open(store: Store) -> Result<Self, SessionError> {
        Ok(ReviewSession {
            chats: store.load()?,
            in_flight: HashSet::new(),
            store: Some(store),
        })
    }

    pub fn chats(&self) -> &[SessionChat] {
        &self.chats
    }

    pub fn list(&self) -> Vec<ChatSummary> {
        self.chats.iter().map(ChatSummary::of).collect()
    }

    /// Looks a chat up by id or by label.
    fn index_of(&self, key: &str) -> Result<usize, SessionError> {
        self.chats
            .iter()
            .position(|c| c.chat.chat_id.as_str() == key)
            .or_else(|| self.chats.iter().position(|c| c.chat.chat_label == key))
            .ok_or_else(|| SessionError::UnknownChat(key.to_string()))
    }

    pub fn get(&self, key: &str) -> Result<&SessionChat, SessionError> {
        Ok(&self.chats[self.index_of(key)?])
    }

    /// Applies `f` to a copy of the chats, persists the copy, then swaps it in.
    fn update<T>(&mut self, f: impl FnOnce(&mut Vec<SessionChat>) -> Result<T, SessionError>) -> Result<T, SessionError> {
        let mut next = self.chats.clone();
        let out = f(&mut next)?;
        if next != self.chats {
            if let Some(store) = &self.store {
                store.save(&next)?;
            }
            self.chats = next;
        }
        Ok(out)
    }

    pub fn add(&mut self, imported: Imported) -> Result<ImportReport, SessionError> {
        let mut chat = imported.chat;
        chat.chat_label = chat_label(self.chats.len());
        let report = ImportReport {
            chat_id: chat.chat_id.to_string(),
            chat_label: chat.chat_label.clone(),
            warnings: imported.warnings.iter().map(ToString::to_string).collect(),
            unparseable_urls: imported.diagnostics.unparseable,
            degraded_urls: imported.diagnostics.degraded,
        };
        self.update(|chats| {
            chats.push(SessionChat {
                state: ChatState::Imported,
                chat,
                receipt: None,
            });
            Ok(())
        })?;
        Ok(report)
    }

    /// The chat as the participant sees it; moves it to reviewed.
    pub fn review(&mut self, key: &str) -> Result<&SessionChat, SessionError> {
        let i = self.index_of(key)?;
        self.update(|chats| {
            if chats[i].state == ChatState::Imported {
                chats[i].state = ChatState::Reviewed;
            }
            Ok(())
        })?;
        Ok(&self.chats[i])
    }

    /// Exact bytes that submission would send.
    pub fn preview(&mut self, key: &str) -> Result<Vec<u8>, SessionError> {
        Ok(payload::to_bytes(&self.review(key)?.chat))
    }

    fn check_editable(&self, i: usize) -> Result<(), SessionError> {
        let c = &self.chats[i];
        let id = c.chat.chat_id.to_string();
        if c.state == ChatState::Submitted {
            return Err(SessionError::AlreadySubmitted(id));
        }
        if self.in_flight.contains(&id) {
            return Err(SessionError::SubmissionInProgress(id));
        }
        Ok(())
    }

    pub fn delete_url(&mut self, key: &str, index: usize) -> Result<UrlRecord, SessionError> {
        let i = self.index_of(key)?;
        self.check_editable(i)?;
        self.update(|chats| {
            let c = &mut chats[i];
            let removed = c.chat.delete_url(index)?;
            c.state = ChatState::Reviewed;
            Ok(removed)
        })
    }

    /// First half of a submission: locks the chat against edits and returns
    /// the bytes to deliver. Must be followed by [`finish_submit`].
    ///
    /// [`finish_submit`]: ReviewSession::finish_submit
    pub fn begin_submit(&mut self, key: &str, targets: Vec<Target>) -> Result<PendingSubmission, SessionError> {
        let i = self.index_of(key)?;
        self.check_editable(i)?;
        if targets.is_empty() {
            return Err(SessionError::NoTargets);
        }
        let payload = self.preview(key)?;
        let chat = &self.chats[i].chat;
        let pending = PendingSubmission {
            chat_id: chat.chat_id.to_string(),
            chat_label: chat.chat_label.clone(),
            targets,
            payload,
        };
        self.in_flight.insert(pending.chat_id.clone());
        Ok(pending)
    }

    /// Records the delivery outcome. On failure the chat stays reviewed and
    /// can be submitted again; targets that did receive the payload get it
    /// again on retry.
    pub fn finish_submit(
        &mut self,
        pending: PendingSubmission,
        outcome: Result<(), DeliveryError>,
    ) -> Result<Receipt, SessionError> {
        self.in_flight.remove(&pending.chat_id);
        outcome?;
        let i = self.index_of(&pending.chat_id)?;
        let receipt = Receipt::new(&pending.chat_id, &pending.chat_label, &pending.targets, &pending.payload);
        self.update(|chats| {
            chats[i].state = ChatState::Submitted;
            chats[i].receipt = Some(receipt.clone());
            Ok(())
        })?;
        Ok(receipt)
    }

    /// Both halves of a submission in one call.
    pub fn submit(&mut self, key: &str, targets: Vec<Target>, dispatcher: &Dispatcher) -> Result<Receipt, SessionError> {
        let pending = self.begin_submit(key, targets)?;
        let outcome = deliver_all(dispatcher, &pending);
        self.finish_submit(pending, outcome)
    }
}

/// Sends the pending payload to each of its targets in order, stopping at the
/// first failure.
pub fn deliver_all(dispatcher: &Dispatcher, pending: &PendingSubmission) -> Result<(), DeliveryError> {
    pending
        .targets
        .iter()
        .try_for_each(|t| dispatcher.deliver(t, &pending.chat_id, &pending.payload))
}
