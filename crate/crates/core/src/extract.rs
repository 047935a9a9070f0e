//! Assembly of the constrained metadata bundle for one chat.
//!
//! An [`ExtractedChat`] is the only structure that may leave the device. It
//! carries dates, aliases, counts and reduced domains; never names, bodies or
//! times of day.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anonymize::{Alias, AnonChatLog};
use crate::urls::{find_urls, FoundUrl, UrlDiagnostics, UrlPipeline, UrlRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("chat log contains no user messages")]
    NoUserMessages,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EditError {
    #[error("url index {index} out of range ({len} urls)")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Opaque random chat identifier. Lowercase letters only, so it can never
/// look like a phone number or date.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChatId(String);

impl ChatId {
    const LEN: usize = 20;

    pub fn random() -> Self {
        let mut rng = rand::thread_rng();
        ChatId(
            (0..Self::LEN)
                .map(|_| rng.gen_range(b'a'..=b'z') as char)
                .collect(),
        )
    }

    pub fn parse(s: &str) -> Option<Self> {
        (!s.is_empty() && s.len() <= 64 && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_'))
            .then(|| ChatId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageType {
    Url,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageMeta {
    pub seq: usize,
    pub date: NaiveDate,
    pub alias: Alias,
    pub kind: MessageType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserTally {
    pub alias: Alias,
    pub total_messages: usize,
    pub url_messages: usize,
    pub text_messages: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCount {
    pub date: NaiveDate,
    pub alias: Alias,
    pub count: usize,
}

/// Field order here is the payload field order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedChat {
    pub chat_id: ChatId,
    pub chat_label: String,
    pub edited: bool,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub num_users: usize,
    pub per_user: Vec<UserTally>,
    /// Sparse: days on which an alias sent nothing have no row.
    pub daily_counts: Vec<DailyCount>,
    pub messages: Vec<MessageMeta>,
    pub urls: Vec<UrlRecord>,
}

#[derive(Debug)]
pub struct Extraction {
    pub chat: ExtractedChat,
    pub diagnostics: UrlDiagnostics,
}

/// Months as fractional 30.44-day periods.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChatDuration {
    pub months: f64,
}

impl ChatDuration {
    pub const DAYS_PER_MONTH: f64 = 30.44;

    pub fn from_days(days: i64) -> Self {
        ChatDuration {
            months: days.max(0) as f64 / Self::DAYS_PER_MONTH,
        }
    }

    /// Months rounded to one decimal, as displayed.
    pub fn rounded(self) -> f64 {
        (self.months * 10.0).round() / 10.0
    }
}

impl fmt::Display for ChatDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.months)
    }
}

/// Classifies every message, runs links through `pipeline`, and discards
/// the bodies.
pub fn extract(log: AnonChatLog, pipeline: &UrlPipeline, chat_label: &str) -> Result<Extraction, ExtractError> {
    if log.messages.is_empty() {
        return Err(ExtractError::NoUserMessages);
    }
    let mut found = Vec::new();
    let mut messages = Vec::with_capacity(log.messages.len());
    for m in log.messages {
        let links = find_urls(&m.body);
        let kind = if links.is_empty() { MessageType::Text } else { MessageType::Url };
        found.extend(links.into_iter().map(|url| FoundUrl {
            message_seq: m.seq,
            alias: m.alias,
            date: m.date,
            url: url.to_string(),
        }));
        messages.push(MessageMeta {
            seq: m.seq,
            date: m.date,
            alias: m.alias,
            kind,
        });
    }
    let (urls, diagnostics) = pipeline.process(&found);

    let start_date = messages.iter().map(|m| m.date).min().unwrap();
    let end_date = messages.iter().map(|m| m.date).max().unwrap();
    let mut chat = ExtractedChat {
        chat_id: ChatId::random(),
        chat_label: chat_label.to_string(),
        edited: false,
        start_date,
        end_date,
        num_users: 0,
        per_user: Vec::new(),
        daily_counts: Vec::new(),
        messages,
        urls,
    };
    chat.recount();
    Ok(Extraction { chat, diagnostics })
}

impl ExtractedChat {
    /// Rebuilds the per-user and per-day tallies from `messages`.
    pub(crate) fn recount(&mut self) {
        let mut per_user: BTreeMap<Alias, UserTally> = BTreeMap::new();
        let mut daily: BTreeMap<(NaiveDate, Alias), usize> = BTreeMap::new();
        for m in &self.messages {
            let tally = per_user.entry(m.alias).or_insert(UserTally {
                alias: m.alias,
                total_messages: 0,
                url_messages: 0,
                text_messages: 0,
            });
            tally.total_messages += 1;
            match m.kind {
                MessageType::Url => tally.url_messages += 1,
                MessageType::Text => tally.text_messages += 1,
            }
            *daily.entry((m.date, m.alias)).or_default() += 1;
        }
        self.num_users = per_user.len();
        self.per_user = per_user.into_values().collect();
        self.daily_counts = daily
            .into_iter()
            .map(|((date, alias), count)| DailyCount { date, alias, count })
            .collect();
    }

    pub fn duration(&self) -> ChatDuration {
        ChatDuration::from_days((self.end_date - self.start_date).num_days())
    }

    pub fn url_message_count(&self) -> usize {
        self.messages.iter().filter(|m| m.kind == MessageType::Url).count()
    }

    /// Removes one URL record. If its message has no other records left the
    /// message becomes text and the sender's tallies move accordingly. Marks
    /// the chat as edited.
    pub fn delete_url(&mut self, index: usize) -> Result<UrlRecord, EditError> {
        if index >= self.urls.len() {
            return Err(EditError::IndexOutOfRange {
                index,
                len: self.urls.len(),
            });
        }
        let removed = self.urls.remove(index);
        self.edited = true;
        let still_linked = self.urls.iter().any(|u| u.message_seq == removed.message_seq);
        if !still_linked {
            if let Some(msg) = self
                .messages
                .iter_mut()
                .find(|m| m.seq == removed.message_seq && m.kind == MessageType::Url)
            {
                msg.kind = MessageType::Text;
                if let Some(t) = self.per_user.iter_mut().find(|t| t.alias == msg.alias) {
                    t.url_messages -= 1;
                    t.text_messages += 1;
                }
            }
        }
        Ok(removed)
    }

    /// Checks every structural invariant of the bundle.
    pub fn validate(&self) -> Result<(), String> {
        if self.messages.is_empty() {
            return Err("no messages".into());
        }
        let min = self.messages.iter().map(|m| m.date).min().unwrap();
        let max = self.messages.iter().map(|m| m.date).max().unwrap();
        if self.start_date != min || self.end_date != max {
            return Err(format!(
                "date range {}..{} does not match messages {min}..{max}",
                self.start_date, self.end_date
            ));
        }
        if self.num_users != self.per_user.len() {
            return Err("num_users disagrees with per_user".into());
        }
        let mut total = 0;
        for t in &self.per_user {
            if t.url_messages + t.text_messages != t.total_messages {
                return Err(format!("{}: url + text != total", t.alias));
            }
            let of_alias = self.messages.iter().filter(|m| m.alias == t.alias);
            let urls = of_alias.clone().filter(|m| m.kind == MessageType::Url).count();
            if of_alias.count() != t.total_messages || urls != t.url_messages {
                return Err(format!("{}: tallies disagree with messages", t.alias));
            }
            total += t.total_messages;
        }
        if total != self.messages.len() {
            return Err("per-user totals do not sum to message count".into());
        }
        let daily: usize = self.daily_counts.iter().map(|d| d.count).sum();
        if daily != self.messages.len() {
            return Err("daily counts do not sum to message count".into());
        }
        if self.daily_counts.iter().any(|d| d.count == 0) {
            return Err("zero row in daily counts".into());
        }
        for u in &self.urls {
            let ok = self
                .messages
                .iter()
                .any(|m| m.seq == u.message_seq && m.kind == MessageType::Url);
            if !ok {
                return Err(format!("url record points at non-url message {}", u.message_seq));
            }
        }
        Ok(())
    }
}
