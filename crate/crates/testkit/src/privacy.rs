//! Leak checks for serialized payloads.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

/// Strings the payload schema itself legitimately contains.
const SCHEMA_WORDS: &[&str] = &[
    "schema_version", "chat_id", "chat_label", "edited", "start_date", "end_date", "num_users",
    "per_user", "alias", "total_messages", "url_messages", "text_messages", "daily_counts", "date",
    "count", "messages", "seq", "kind", "url", "text", "urls", "domain", "cc_tld", "was_shortened",
    "true", "false", "null", "User",
];

const DATE_KEYS: &[&str] = &["start_date", "end_date", "date"];

fn phone_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Seven or more digits, optionally separated by spaces, dots, dashes or
    // parentheses.
    RE.get_or_init(|| Regex::new(r"\+?\(?\d(?:[\s.\-()]{0,2}\d){6,}").unwrap())
}

fn time_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b\d{1,2}:\d{2}(?::\d{2})?\b").unwrap())
}

fn iso_date() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d{4}-\d{2}-\d{2}$").unwrap())
}

/// What must not appear in a payload.
#[derive(Debug, Default, Clone)]
pub struct Secrets {
    pub names: Vec<String>,
    pub bodies: Vec<String>,
    /// Reduced domains, which are allowed to overlap body text.
    pub allowed: Vec<String>,
}

impl Secrets {
    fn allowed_token(&self, token: &str) -> bool {
        self.allowed.iter().any(|d| d.contains(token))
            || SCHEMA_WORDS.iter().any(|w| w.contains(token))
    }
}

fn body_tokens(body: &str) -> impl Iterator<Item = &str> {
    body.split(|c: char| c.is_whitespace())
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|t| t.chars().count() >= 5)
}

fn json_escaped(s: &str) -> String {
    let quoted = serde_json::to_string(s).unwrap();
    quoted[1..quoted.len() - 1].to_string()
}

fn walk<'a>(value: &'a Value, key: Option<&'a str>, out: &mut Vec<(Option<&'a str>, &'a str)>) {
    match value {
        Value::String(s) => out.push((key, s)),
        Value::Array(items) => items.iter().for_each(|v| walk(v, key, out)),
        Value::Object(map) => map.iter().for_each(|(k, v)| {
            out.push((None, k));
            walk(v, Some(k), out)
        }),
        _ => {}
    }
}

/// Returns a description of every leak found in `payload`.
pub fn scan(payload: &str, secrets: &Secrets) -> Vec<String> {
    let mut violations = Vec::new();
    for name in &secrets.names {
        if payload.contains(name.as_str()) || payload.contains(&json_escaped(name)) {
            violations.push(format!("sender name {name:?} present"));
        }
    }
    for body in &secrets.bodies {
        let trimmed = body.trim();
        if trimmed.chars().count() >= 5 && !secrets.allowed_token(trimmed) && payload.contains(&json_escaped(trimmed)) {
            violations.push(format!("message body {trimmed:?} present"));
        }
        for token in body_tokens(body) {
            if !secrets.allowed_token(token) && payload.contains(&json_escaped(token)) {
                violations.push(format!("body fragment {token:?} present"));
            }
        }
    }
    if let Some(m) = time_pattern().find(payload) {
        violations.push(format!("time of day {:?} present", m.as_str()));
    }

    let Ok(value) = serde_json::from_str::<Value>(payload) else {
        violations.push("payload is not valid JSON".into());
        return violations;
    };
    let mut strings = Vec::new();
    walk(&value, None, &mut strings);
    for (key, s) in strings {
        if key.is_none() && s.to_ascii_lowercase().contains("time") {
            violations.push(format!("time-like field {s:?}"));
        }
        if key.is_some_and(|k| DATE_KEYS.contains(&k)) {
            if !iso_date().is_match(s) {
                violations.push(format!("malformed date {s:?}"));
            }
            continue;
        }
        if let Some(m) = phone_pattern().find(s) {
            violations.push(format!("phone-number pattern {:?} in {s:?}", m.as_str()));
        }
    }
    violations
}
