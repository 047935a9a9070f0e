//! Replacement of sender names with dense, per-chat coded identifiers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::export::{ChatLog, MessageKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnonymizeError {
    #[error("chat log contains no user messages")]
    NoUserMessages,
}

/// A sender's coded identifier within one chat. Serialized as `"User<n>"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alias(pub u32);

impl Alias {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Alias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&user_label(self.0))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid alias {0:?}, expected User<n>")]
pub struct InvalidAlias(String);

impl FromStr for Alias {
    type Err = InvalidAlias;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("User").ok_or_else(|| InvalidAlias(s.into()))?;
        // Reject "User", "User+1" and non-canonical forms such as "User01".
        if digits.is_empty()
            || !digits.bytes().all(|b| b.is_ascii_digit())
            || (digits.len() > 1 && digits.starts_with('0'))
        {
            return Err(InvalidAlias(s.into()));
        }
        digits.parse().map(Alias).map_err(|_| InvalidAlias(s.into()))
    }
}

impl Serialize for Alias {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Alias {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `"User"` followed by the decimal index.
pub fn user_label(index: u32) -> String {
    format!("User{index}")
}

/// Spreadsheet-style chat labels: A..Z, AA, AB, ...
pub fn chat_label(index: usize) -> String {
    let mut n = index + 1;
    let mut out = Vec::new();
    while n > 0 {
        n -= 1;
        out.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

/// Sender name to alias mapping for a single chat.
///
/// Lives only in memory; it deliberately implements neither `Serialize` nor a
/// `Debug` that prints names.
pub struct AliasTable {
    names: Vec<String>,
    lookup: HashMap<String, Alias>,
}

impl AliasTable {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn alias_of(&self, name: &str) -> Option<Alias> {
        self.lookup.get(name).copied()
    }

    pub fn name_of(&self, alias: Alias) -> Option<&str> {
        self.names.get(alias.0 as usize).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    fn intern(&mut self, name: &str) -> Alias {
        if let Some(alias) = self.lookup.get(name) {
            return *alias;
        }
        let alias = Alias(self.names.len() as u32);
        self.names.push(name.to_string());
        self.lookup.insert(name.to_string(), alias);
        alias
    }
}

impl fmt::Debug for AliasTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AliasTable({} senders)", self.names.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonMessage {
    pub seq: usize,
    pub date: NaiveDate,
    pub alias: Alias,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonChatLog {
    pub messages: Vec<AnonMessage>,
    pub user_count: usize,
}

/// Assigns aliases in order of each sender's first user message and drops
/// system messages. Consumes the log so raw names do not outlive this call
/// anywhere but the returned table.
pub fn anonymize(log: ChatLog) -> Result<(AnonChatLog, AliasTable), AnonymizeError> {
    let mut table = AliasTable {
        names: Vec::new(),
        lookup: HashMap::new(),
    };
    let messages: Vec<AnonMessage> = log
        .messages
        .into_iter()
        .filter(|m| m.kind == MessageKind::User)
        .filter_map(|m| {
            let alias = table.intern(m.sender_name.as_deref()?);
            Some(AnonMessage {
                seq: m.seq,
                date: m.date,
                alias,
                body: m.body,
            })
        })
        .collect();
    if messages.is_empty() {
        return Err(AnonymizeError::NoUserMessages);
    }
    let anon = AnonChatLog {
        messages,
        user_count: table.len(),
    };
    Ok((anon, table))
}
