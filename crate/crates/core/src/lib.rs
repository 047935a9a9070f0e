//! Local-first extraction of constrained, reviewable metadata from exported
//! chat logs, and aggregation over the payloads participants approve.
//!
//! The flow for one chat is
//! [`export::parse_export`] → [`anonymize::anonymize`] → [`extract::extract`],
//! after which raw names and bodies are gone and only an
//! [`extract::ExtractedChat`] remains.

pub mod analysis;
pub mod anonymize;
pub mod export;
pub mod extract;
pub mod payload;
pub mod urls;

use thiserror::Error;

pub use anonymize::{Alias, AliasTable, AnonChatLog};
pub use export::{ChatLog, ExportFormat, ParseError, RawExport};
pub use extract::{ChatId, ExtractedChat, Extraction};
pub use urls::{UrlPipeline, UrlRecord};

/// Any failure on the way from raw export to extracted chat.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Anonymize(#[from] anonymize::AnonymizeError),
    #[error(transparent)]
    Extract(#[from] extract::ExtractError),
}

/// Parse, pseudonymize and extract one export. The alias table and raw log
/// are dropped before this returns.
pub fn process_export(
    export: &RawExport,
    parser: &export::ExportParser,
    pipeline: &UrlPipeline,
    chat_label: &str,
) -> Result<(Extraction, Vec<export::ParseWarning>), PipelineError> {
    let mut log = parser.parse(export)?;
    let warnings = std::mem::take(&mut log.warnings);
    let (anon, _aliases) = anonymize::anonymize(log)?;
    let extraction = extract::extract(anon, pipeline, chat_label)?;
    Ok((extraction, warnings))
}
