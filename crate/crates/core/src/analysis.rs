//! Dataset-level aggregation over submitted payloads.
//!
//! Participants contribute different numbers of chats, so headline figures
//! are medians of per-participant medians. Flat aggregates are reported next
//! to them where both readings are useful, and are always labeled.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::extract::{ExtractedChat, MessageType};
use crate::payload::{self, PayloadError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no values to aggregate")]
    EmptyInput,
    #[error("no urls to aggregate")]
    NoUrls,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Payload {
        path: PathBuf,
        #[source]
        source: PayloadError,
    },
}

/// Middle value; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Result<f64, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// Median within each group, then the median of those. Empty groups are
/// skipped.
pub fn median_of_groups<G: AsRef<[f64]>>(groups: &[G]) -> Result<f64, AnalysisError> {
    let inner: Vec<f64> = groups
        .iter()
        .filter(|g| !g.as_ref().is_empty())
        .map(|g| median(g.as_ref()))
        .collect::<Result<_, _>>()?;
    median(&inner)
}

/// Share of messages carrying a link, in percent.
pub fn pct_url_messages(chat: &ExtractedChat) -> Result<f64, AnalysisError> {
    if chat.messages.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    Ok(100.0 * chat.url_message_count() as f64 / chat.messages.len() as f64)
}

/// Fraction of the chat's links sent by its most active link sharer.
pub fn top_sharer_share(chat: &ExtractedChat) -> Result<f64, AnalysisError> {
    if chat.urls.is_empty() {
        return Err(AnalysisError::NoUrls);
    }
    let mut per_alias: HashMap<_, usize> = HashMap::new();
    for u in &chat.urls {
        *per_alias.entry(u.alias).or_default() += 1;
    }
    let top = per_alias.values().copied().max().unwrap_or(0);
    Ok(top as f64 / chat.urls.len() as f64)
}

/// Median number of times each distinct domain appears in the chat.
pub fn median_domain_repeats(chat: &ExtractedChat) -> Result<f64, AnalysisError> {
    if chat.urls.is_empty() {
        return Err(AnalysisError::NoUrls);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for u in &chat.urls {
        *counts.entry(u.domain.as_str()).or_default() += 1;
    }
    let values: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    median(&values)
}

/// The top-level label of a domain, with its dot: `.com`, `.uk`.
pub fn tld_of(domain: &str) -> String {
    format!(".{}", domain.rsplit('.').next().unwrap_or(domain))
}

#[derive(Debug, Clone)]
pub struct Participant {
    pub id: String,
    pub chats: Vec<ExtractedChat>,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub participants: Vec<Participant>,
}

/// Orders "P2" before "P10".
fn natural_key(s: &str) -> Vec<(u8, String)> {
    let mut key = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        let digit = c.is_ascii_digit();
        let mut run = String::new();
        while let Some(&c) = chars.peek() {
            if c.is_ascii_digit() != digit {
                break;
            }
            run.push(c);
            chars.next();
        }
        if digit {
            let trimmed = run.trim_start_matches('0');
            key.push((0, format!("{:0>20}", trimmed)));
        } else {
            key.push((1, run));
        }
    }
    key
}

fn cmp_participant(a: &str, b: &str) -> Ordering {
    natural_key(a).cmp(&natural_key(b)).then_with(|| a.cmp(b))
}

fn cmp_label(a: &str, b: &str) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl Dataset {
    pub fn new(mut participants: Vec<Participant>) -> Self {
        participants.retain(|p| !p.chats.is_empty());
        participants.sort_by(|a, b| cmp_participant(&a.id, &b.id));
        for p in &mut participants {
            p.chats.sort_by(|a, b| cmp_label(&a.chat_label, &b.chat_label));
        }
        Dataset { participants }
    }

    /// Loads `dir/<participant>/*.json`. Participants without payloads are
    /// skipped; files directly under `dir` are ignored.
    pub fn load(dir: &Path) -> Result<Self, AnalysisError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| AnalysisError::Io { path, source }
        };
        let mut participants = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io(dir))? {
            let entry = entry.map_err(io(dir))?;
            let path = entry.path();
            if !path.is_dir() {
                continue;
            }
            let mut files: Vec<PathBuf> = std::fs::read_dir(&path)
                .map_err(io(&path))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            let mut chats = Vec::with_capacity(files.len());
            for file in files {
                let bytes = std::fs::read(&file).map_err(io(&file))?;
                let chat = payload::from_slice(&bytes).map_err(|source| AnalysisError::Payload {
                    path: file.clone(),
                    source,
                })?;
                chats.push(chat);
            }
            participants.push(Participant {
                id: entry.file_name().to_string_lossy().into_owned(),
                chats,
            });
        }
        Ok(Dataset::new(participants))
    }

    pub fn chats(&self) -> impl Iterator<Item = &ExtractedChat> {
        self.participants.iter().flat_map(|p| p.chats.iter())
    }

    /// Inner median over each participant's chats, outer median over
    /// participants. Chats where `metric` is undefined are skipped.
    pub fn median_of_medians<F>(&self, metric: F) -> Result<f64, AnalysisError>
    where
        F: Fn(&ExtractedChat) -> Option<f64>,
    {
        let groups: Vec<Vec<f64>> = self
            .participants
            .iter()
            .map(|p| p.chats.iter().filter_map(&metric).collect())
            .collect();
        median_of_groups(&groups)
    }

    fn url_records(&self) -> impl Iterator<Item = &crate::urls::UrlRecord> {
        self.chats().flat_map(|c| c.urls.iter())
    }

    pub fn domain_frequency(&self) -> Result<Vec<FrequencyRow>, AnalysisError> {
        frequency(self.url_records().map(|u| u.domain.clone()))
    }

    pub fn tld_frequency(&self) -> Result<Vec<FrequencyRow>, AnalysisError> {
        frequency(self.url_records().map(|u| tld_of(&u.domain)))
    }

    pub fn cctld_presence(&self) -> Result<CcTldPresence, AnalysisError> {
        if self.url_records().next().is_none() {
            return Err(AnalysisError::NoUrls);
        }
        let cctlds = frequency(self.url_records().filter_map(|u| u.cc_tld.clone()))
            .map(|rows| rows.into_iter().map(|r| r.key).collect())
            .unwrap_or_default();
        let total_chats = self.chats().count();
        let chats_with_cctld = self.chats().filter(|c| c.urls.iter().any(|u| u.cc_tld.is_some())).count();
        Ok(CcTldPresence {
            cctlds,
            chats_with_cctld,
            total_chats,
            chat_pct: 100.0 * chats_with_cctld as f64 / total_chats as f64,
        })
    }

    pub fn members_distribution(&self) -> Result<MembersDistribution, AnalysisError> {
        let rows: Vec<MembersRow> = self
            .participants
            .iter()
            .flat_map(|p| {
                p.chats.iter().map(|c| MembersRow {
                    participant: p.id.clone(),
                    chat_label: c.chat_label.clone(),
                    members: c.num_users,
                })
            })
            .collect();
        let counts: Vec<f64> = rows.iter().map(|r| r.members as f64).collect();
        let median = median(&counts)?;
        Ok(MembersDistribution { rows, median })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub key: String,
    pub count: usize,
    pub pct: f64,
}

/// Counts keys; sorted by descending count, then key.
fn frequency(keys: impl Iterator<Item = String>) -> Result<Vec<FrequencyRow>, AnalysisError> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut total = 0;
    for k in keys {
        *counts.entry(k).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(AnalysisError::NoUrls);
    }
    let mut rows: Vec<FrequencyRow> = counts
        .into_iter()
        .map(|(key, count)| FrequencyRow {
            key,
            count,
            pct: 100.0 * count as f64 / total as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcTldPresence {
    pub cctlds: Vec<String>,
    pub chats_with_cctld: usize,
    pub total_chats: usize,
    /// Per-chat presence, not per-participant medians.
    pub chat_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembersRow {
    pub participant: String,
    pub chat_label: String,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembersDistribution {
    pub rows: Vec<MembersRow>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipantRow {
    pub participant: String,
    pub chats: usize,
    pub urls: usize,
    pub median_chat_months: f64,
    pub edited_chats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub chats: f64,
    pub urls: f64,
    pub median_chat_months: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageTotals {
    pub url_messages: usize,
    pub text_messages: usize,
    pub total_messages: usize,
    pub url_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrlShare {
    /// Median over participants of each participant's median chat share.
    pub median_of_medians_pct: Option<f64>,
    /// All URL messages over all messages, ignoring participant grouping.
    pub flat_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopSharer {
    pub median_of_medians: Option<f64>,
    /// Unweighted mean over chats with at least one link.
    pub flat_mean: Option<f64>,
    pub chats_with_urls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditSummary {
    pub edited_chats: usize,
    pub total_chats: usize,
    pub participants_with_edits: usize,
    pub total_participants: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub participants: Vec<ParticipantRow>,
    pub median_row: Option<MedianRow>,
    pub totals: MessageTotals,
    pub url_message_share: UrlShare,
    pub top_sharer: TopSharer,
    pub median_domain_repeats: Option<f64>,
    pub domains: Vec<FrequencyRow>,
    pub tlds: Vec<FrequencyRow>,
    pub cctlds: Option<CcTldPresence>,
    pub members: Option<MembersDistribution>,
    pub edits: EditSummary,
}

impl DatasetReport {
    pub fn build(dataset: &Dataset) -> Self {
        let participants: Vec<ParticipantRow> = dataset
            .participants
            .iter()
            .map(|p| {
                let months: Vec<f64> = p.chats.iter().map(|c| c.duration().months).collect();
                ParticipantRow {
                    participant: p.id.clone(),
                    chats: p.chats.len(),
                    urls: p.chats.iter().map(|c| c.urls.len()).sum(),
                    median_chat_months: median(&months).unwrap_or(0.0),
                    edited_chats: p.chats.iter().filter(|c| c.edited).count(),
                }
            })
            .collect();
        let column = |f: fn(&ParticipantRow) -> f64| median(&participants.iter().map(f).collect::<Vec<_>>()).ok();
        let median_row = match (
            column(|r| r.chats as f64),
            column(|r| r.urls as f64),
            column(|r| r.median_chat_months),
        ) {
            (Some(chats), Some(urls), Some(median_chat_months)) => Some(MedianRow {
                chats,
                urls,
                median_chat_months,
            }),
            _ => None,
        };

        let total_messages: usize = dataset.chats().map(|c| c.messages.len()).sum();
        let url_messages: usize = dataset.chats().map(|c| c.url_message_count()).sum();
        let totals = MessageTotals {
            url_messages,
            text_messages: total_messages - url_messages,
            total_messages,
            url_records: dataset.chats().map(|c| c.urls.len()).sum(),
        };
        let url_message_share = UrlShare {
            median_of_medians_pct: dataset.median_of_medians(|c| pct_url_messages(c).ok()).ok(),
            flat_pct: (total_messages > 0).then(|| 100.0 * url_messages as f64 / total_messages as f64),
        };

        let shares: Vec<f64> = dataset.chats().filter_map(|c| top_sharer_share(c).ok()).collect();
        let top_sharer = TopSharer {
            median_of_medians: dataset.median_of_medians(|c| top_sharer_share(c).ok()).ok(),
            flat_mean: (!shares.is_empty()).then(|| shares.iter().sum::<f64>() / shares.len() as f64),
            chats_with_urls: shares.len(),
        };

        let total_chats = dataset.chats().count();
        let edits = EditSummary {
            edited_chats: dataset.chats().filter(|c| c.edited).count(),
            total_chats,
            participants_with_edits: participants.iter().filter(|p| p.edited_chats > 0).count(),
            total_participants: participants.len(),
        };

        DatasetReport {
            median_row,
            totals,
            url_message_share,
            top_sharer,
            median_domain_repeats: dataset.median_of_medians(|c| median_domain_repeats(c).ok()).ok(),
            domains: dataset.domain_frequency().unwrap_or_default(),
            tlds: dataset.tld_frequency().unwrap_or_default(),
            cctlds: dataset.cctld_presence().ok(),
            members: dataset.members_distribution().ok(),
            edits,
            participants,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let na = "n/a".to_string();
        let pct = |v: Option<f64>| v.map(|v| format!("{v:.2}%")).unwrap_or_else(|| na.clone());
        let frac = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| na.clone());

        writeln!(out, "== Participants ==").unwrap();
        writeln!(out, "{:<14}{:>8}{:>8}{:>16}", "participant", "chats", "urls", "median months").unwrap();
        if self.participants.is_empty() {
            writeln!(out, "{:<14}{:>8}{:>8}{:>16}", "n/a", "n/a", "n/a", "n/a").unwrap();
        }
        for r in &self.participants {
            writeln!(
                out,
                "{:<14}{:>8}{:>8}{:>16.1}",
                r.participant, r.chats, r.urls, r.median_chat_months
            )
            .unwrap();
        }
        match &self.median_row {
            Some(m) => writeln!(
                out,
                "{:<14}{:>8}{:>8}{:>16.1}",
                "median", m.chats, m.urls, m.median_chat_months
            ),
            None => writeln!(out, "{:<14}{:>8}{:>8}{:>16}", "median", "n/a", "n/a", "n/a"),
        }
        .unwrap();

        writeln!(out, "\n== Messages ==").unwrap();
        let t = &self.totals;
        writeln!(out, "{:<34}{:>10}", "url messages", t.url_messages).unwrap();
        writeln!(out, "{:<34}{:>10}", "text messages", t.text_messages).unwrap();
        writeln!(out, "{:<34}{:>10}", "total messages", t.total_messages).unwrap();
        writeln!(out, "{:<34}{:>10}", "url records", t.url_records).unwrap();
        let s = &self.url_message_share;
        writeln!(out, "{:<34}{:>10}", "url share (median of medians)", pct(s.median_of_medians_pct)).unwrap();
        writeln!(out, "{:<34}{:>10}", "url share (flat)", pct(s.flat_pct)).unwrap();
        let ts = &self.top_sharer;
        writeln!(out, "{:<34}{:>10}", "top sharer (median of medians)", frac(ts.median_of_medians)).unwrap();
        writeln!(out, "{:<34}{:>10}", "top sharer (flat mean over chats)", frac(ts.flat_mean)).unwrap();
        writeln!(out, "{:<34}{:>10}", "median domain repeats per chat", frac(self.median_domain_repeats)).unwrap();
        let e = &self.edits;
        writeln!(out, "{:<34}{:>10}", "edited chats", format!("{}/{}", e.edited_chats, e.total_chats)).unwrap();
        writeln!(
            out,
            "{:<34}{:>10}",
            "participants with edits",
            format!("{}/{}", e.participants_with_edits, e.total_participants)
        )
        .unwrap();

        for (title, rows) in [("Domains", &self.domains), ("TLDs", &self.tlds)] {
            writeln!(out, "\n== {title} ==").unwrap();
            if rows.is_empty() {
                writeln!(out, "{:<34}{:>10}", "n/a", "n/a").unwrap();
            }
            for r in rows.iter() {
                writeln!(out, "{:<26}{:>8}{:>10}", r.key, r.count, format!("{:.1}%", r.pct)).unwrap();
            }
        }

        writeln!(out, "\n== ccTLDs ==").unwrap();
        match &self.cctlds {
            Some(c) => {
                let list = if c.cctlds.is_empty() { na.clone() } else { c.cctlds.join(", ") };
                writeln!(out, "{:<34}{}", "present", list).unwrap();
                writeln!(
                    out,
                    "{:<34}{:>10}",
                    "chats with a ccTLD (per chat)",
                    format!("{}/{} ({:.1}%)", c.chats_with_cctld, c.total_chats, c.chat_pct)
                )
                .unwrap();
            }
            None => writeln!(out, "{:<34}{:>10}", "n/a", "n/a").unwrap(),
        }

        writeln!(out, "\n== Chat members ==").unwrap();
        match &self.members {
            Some(m) => {
                for r in &m.rows {
                    writeln!(out, "{:<14}{:<8}{:>8}", r.participant, r.chat_label, r.members).unwrap();
                }
                writeln!(out, "{:<22}{:>8}", "median", m.median).unwrap();
            }
            None => writeln!(out, "{:<14}{:<8}{:>8}", "n/a", "n/a", "n/a").unwrap(),
        }
        out
    }
}

/// Distinct ccTLDs in first-seen order; handy for quick listings.
pub fn distinct_cctlds(chat: &ExtractedChat) -> Vec<String> {
    let mut seen = BTreeSet::new();
    chat.urls
        .iter()
        .filter_map(|u| u.cc_tld.clone())
        .filter(|c| seen.insert(c.clone()))
        .collect()
}

/// Percentage of messages that are text.
pub fn pct_text_messages(chat: &ExtractedChat) -> Result<f64, AnalysisError> {
    if chat.messages.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let text = chat.messages.iter().filter(|m| m.kind == MessageType::Text).count();
    Ok(100.0 * text as f64 / chat.messages.len() as f64)
}
