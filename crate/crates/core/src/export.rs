//! Parsing of plain-text chat exports.
//!
//! Two export dialects are understood:
//!
//! * android-style: `D/M/YY, HH:MM - Sender: body`
//! * ios-style: `[D/M/YY, HH:MM:SS] Sender: body`
//!
//! Lines that do not start with a header are folded into the body of the
//! preceding message. Headers without a `Name: ` separator, or whose would-be
//! sender contains one of the configured system phrases, become system
//! messages.
//!
//! Nothing in this module writes to disk; a [`ChatLog`] holds raw names and
//! bodies and must not leave the process.

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{NaiveDate, NaiveTime};
use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("export is empty")]
    EmptyExport,
    #[error("no line matches a known export header")]
    UnrecognizedFormat,
    #[error("export contains no user messages")]
    NoUserMessages,
    #[error("line {line}: date is invalid under both day-first and month-first readings")]
    InvalidDate { line: usize },
    #[error("line {line}: invalid time of day")]
    InvalidTime { line: usize },
}

/// Non-fatal observations made while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// Invalid UTF-8 sequences were replaced with U+FFFD.
    InvalidUtf8 { replaced: usize },
    /// Non-empty lines before the first header; they belong to no message.
    OrphanLines { count: usize },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::InvalidUtf8 { replaced } => {
                write!(f, "{replaced} invalid UTF-8 sequence(s) replaced")
            }
            ParseWarning::OrphanLines { count } => {
                write!(f, "{count} line(s) before the first message were skipped")
            }
        }
    }
}

/// Untrusted export text as handed over by the participant.
#[derive(Clone)]
pub struct RawExport {
    content: String,
    source_name: String,
    replaced: usize,
}

impl RawExport {
    pub fn from_text(content: impl Into<String>, source_name: impl Into<String>) -> Self {
        RawExport {
            content: content.into(),
            source_name: source_name.into(),
            replaced: 0,
        }
    }

    /// Decodes `bytes` as UTF-8, replacing invalid sequences.
    pub fn from_bytes(bytes: &[u8], source_name: impl Into<String>) -> Self {
        let mut content = String::with_capacity(bytes.len());
        let mut replaced = 0;
        for chunk in bytes.utf8_chunks() {
            content.push_str(chunk.valid());
            if !chunk.invalid().is_empty() {
                content.push(char::REPLACEMENT_CHARACTER);
                replaced += 1;
            }
        }
        RawExport {
            content,
            source_name: source_name.into(),
            replaced,
        }
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self::from_bytes(&bytes, name))
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    /// Number of invalid UTF-8 sequences replaced during decoding.
    pub fn replacement_count(&self) -> usize {
        self.replaced
    }
}

// Raw content never goes to logs.
impl fmt::Debug for RawExport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RawExport")
            .field("source_name", &self.source_name)
            .field("bytes", &self.content.len())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExportFormat {
    AndroidStyle,
    IosStyle,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::AndroidStyle => "android-style",
            ExportFormat::IosStyle => "ios-style",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMessage {
    pub seq: usize,
    pub date: NaiveDate,
    /// Local-only. Never copied into anything exportable.
    pub time_of_day: NaiveTime,
    /// `None` exactly when `kind` is [`MessageKind::System`].
    pub sender_name: Option<String>,
    pub body: String,
    pub kind: MessageKind,
}

#[derive(Debug, Clone)]
pub struct ChatLog {
    pub messages: Vec<ParsedMessage>,
    pub format: ExportFormat,
    pub warnings: Vec<ParseWarning>,
}

impl ChatLog {
    pub fn user_messages(&self) -> impl Iterator<Item = &ParsedMessage> {
        self.messages.iter().filter(|m| m.kind == MessageKind::User)
    }
}

#[derive(Debug, Clone)]
pub struct ParserConfig {
    pub system_phrases: Vec<String>,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            system_phrases: [
                "Messages and calls are end-to-end encrypted",
                "created group",
                "added",
                "left",
                "changed the subject",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        }
    }
}

fn android_header() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\u{200e}?(\d{1,2})/(\d{1,2})/(\d{4}|\d{2}), (\d{1,2}):(\d{2})(?:[ \u{202f}]?([AaPp])\.?[Mm]\.?)? - (.*)$",
        )
        .unwrap()
    })
}

fn ios_header() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\u{200e}?\[(\d{1,2})/(\d{1,2})/(\d{4}|\d{2}), (\d{1,2}):(\d{2}):(\d{2})(?:[ \u{202f}]?([AaPp])\.?[Mm]\.?)?\] (.*)$",
        )
        .unwrap()
    })
}

fn lines(content: &str) -> impl Iterator<Item = &str> {
    content.trim_start_matches('\u{feff}').lines()
}

/// Picks the dialect whose header pattern matches the most lines.
///
/// Ties go to ios-style.
pub fn detect_format(export: &RawExport) -> Result<ExportFormat, ParseError> {
    if export.content.trim().is_empty() {
        return Err(ParseError::EmptyExport);
    }
    let (mut android, mut ios) = (0usize, 0usize);
    for line in lines(&export.content) {
        if android_header().is_match(line) {
            android += 1;
        } else if ios_header().is_match(line) {
            ios += 1;
        }
    }
    match (android, ios) {
        (0, 0) => Err(ParseError::UnrecognizedFormat),
        (a, i) if a > i => Ok(ExportFormat::AndroidStyle),
        _ => Ok(ExportFormat::IosStyle),
    }
}

struct Header<'a> {
    line: usize,
    first: u32,
    second: u32,
    year: i32,
    time: NaiveTime,
    rest: &'a str,
}

fn parse_header(format: ExportFormat, line_no: usize, line: &str) -> Option<Result<Header<'_>, ParseError>> {
    let caps = match format {
        ExportFormat::AndroidStyle => android_header().captures(line)?,
        ExportFormat::IosStyle => ios_header().captures(line)?,
    };
    let num = |i: usize| caps.get(i).map(|m| m.as_str().parse::<u32>().unwrap_or(u32::MAX));
    let (seconds, meridiem, rest) = match format {
        ExportFormat::AndroidStyle => (Some(0), caps.get(6), caps.get(7)),
        ExportFormat::IosStyle => (num(6), caps.get(7), caps.get(8)),
    };
    let year = num(3).unwrap() as i32;
    let year = if year < 100 { 2000 + year } else { year };
    let mut hour = num(4).unwrap();
    if let Some(m) = meridiem {
        if !(1..=12).contains(&hour) {
            return Some(Err(ParseError::InvalidTime { line: line_no }));
        }
        let pm = m.as_str().eq_ignore_ascii_case("p");
        hour = match (hour, pm) {
            (12, false) => 0,
            (12, true) => 12,
            (h, true) => h + 12,
            (h, false) => h,
        };
    }
    let Some(time) = NaiveTime::from_hms_opt(hour, num(5).unwrap(), seconds.unwrap()) else {
        return Some(Err(ParseError::InvalidTime { line: line_no }));
    };
    Some(Ok(Header {
        line: line_no,
        first: num(1).unwrap(),
        second: num(2).unwrap(),
        year,
        time,
        rest: rest.map(|m| m.as_str()).unwrap_or(""),
    }))
}

#[derive(Clone, Copy)]
enum DateOrder {
    MonthFirst,
    DayFirst,
}

impl DateOrder {
    fn date(self, h: &Header<'_>) -> Option<NaiveDate> {
        match self {
            DateOrder::MonthFirst => NaiveDate::from_ymd_opt(h.year, h.first, h.second),
            DateOrder::DayFirst => NaiveDate::from_ymd_opt(h.year, h.second, h.first),
        }
    }
}

/// Chooses the field order under which every date in the file is valid,
/// preferring month-first when both work.
fn choose_date_order(headers: &[Header<'_>]) -> Result<DateOrder, ParseError> {
    for order in [DateOrder::MonthFirst, DateOrder::DayFirst] {
        if headers.iter().all(|h| order.date(h).is_some()) {
            return Ok(order);
        }
    }
    // Report the first line that is invalid under both readings, or failing
    // that the first line invalid under month-first.
    let bad = headers
        .iter()
        .find(|h| DateOrder::MonthFirst.date(h).is_none() && DateOrder::DayFirst.date(h).is_none())
        .or_else(|| headers.iter().find(|h| DateOrder::MonthFirst.date(h).is_none()))
        .map(|h| h.line)
        .unwrap_or(0);
    Err(ParseError::InvalidDate { line: bad })
}

pub struct ExportParser {
    system_re: Option<Regex>,
}

impl Default for ExportParser {
    fn default() -> Self {
        Self::new(&ParserConfig::default())
    }
}

impl ExportParser {
    pub fn new(config: &ParserConfig) -> Self {
        let alternatives: Vec<String> = config
            .system_phrases
            .iter()
            .filter(|p| !p.trim().is_empty())
            .map(|p| regex::escape(p.trim()))
            .collect();
        let system_re = (!alternatives.is_empty())
            .then(|| Regex::new(&format!(r"\b(?:{})\b", alternatives.join("|"))).unwrap());
        ExportParser { system_re }
    }

    fn is_system_phrase(&self, text: &str) -> bool {
        self.system_re.as_ref().is_some_and(|re| re.is_match(text))
    }

    /// Splits the text after a header into sender and body.
    fn split_sender<'a>(&self, rest: &'a str) -> Option<(&'a str, &'a str)> {
        let (sender, body) = rest.split_once(": ")?;
        let sender = sender.trim_start_matches('\u{200e}');
        if sender.trim().is_empty() || self.is_system_phrase(sender) {
            return None;
        }
        Some((sender, body))
    }

    pub fn parse(&self, export: &RawExport) -> Result<ChatLog, ParseError> {
        let format = detect_format(export)?;

        let mut headers = Vec::new();
        // Index into `headers` of the message each continuation belongs to.
        let mut continuations: Vec<(usize, &str)> = Vec::new();
        let mut orphans = 0;
        for (idx, line) in lines(&export.content).enumerate() {
            match parse_header(format, idx + 1, line) {
                Some(header) => headers.push(header?),
                None if headers.is_empty() => {
                    if !line.trim().is_empty() {
                        orphans += 1;
                    }
                }
                None => continuations.push((headers.len() - 1, line)),
            }
        }

        let order = choose_date_order(&headers)?;
        let mut messages: Vec<ParsedMessage> = headers
            .iter()
            .enumerate()
            .map(|(seq, h)| {
                let date = order.date(h).expect("date order validated");
                let (sender_name, body, kind) = match self.split_sender(h.rest) {
                    Some((sender, body)) => (Some(sender.to_string()), body.to_string(), MessageKind::User),
                    None => (None, h.rest.to_string(), MessageKind::System),
                };
                ParsedMessage {
                    seq,
                    date,
                    time_of_day: h.time,
                    sender_name,
                    body,
                    kind,
                }
            })
            .collect();
        for (owner, line) in continuations {
            let body = &mut messages[owner].body;
            body.push('\n');
            body.push_str(line);
        }

        if !messages.iter().any(|m| m.kind == MessageKind::User) {
            return Err(ParseError::NoUserMessages);
        }
        messages.sort_by_key(|m| (m.date, m.time_of_day, m.seq));

        let mut warnings = Vec::new();
        if export.replaced > 0 {
            warnings.push(ParseWarning::InvalidUtf8 { replaced: export.replaced });
        }
        if orphans > 0 {
            warnings.push(ParseWarning::OrphanLines { count: orphans });
        }
        Ok(ChatLog {
            messages,
            format,
            warnings,
        })
    }
}

/// Parses with the default system-phrase list.
pub fn parse_export(export: &RawExport) -> Result<ChatLog, ParseError> {
    ExportParser::default().parse(export)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawExport {
        RawExport::from_text(text, "test.txt")
    }

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn detects_android() {
        assert_eq!(detect_format(&raw("1/5/21, 10:01 - Alice: hi")), Ok(ExportFormat::AndroidStyle));
    }

    #[test]
    fn detects_ios() {
        assert_eq!(detect_format(&raw("[1/5/21, 10:01:30] Alice: hi")), Ok(ExportFormat::IosStyle));
    }

    #[test]
    fn prose_is_unrecognized() {
        assert_eq!(
            detect_format(&raw("random prose\nno timestamps")),
            Err(ParseError::UnrecognizedFormat)
        );
    }

    #[test]
    fn majority_wins() {
        let text = "[1/5/21, 10:01:30] A: x\n1/5/21, 10:01 - B: y\n1/5/21, 10:02 - B: z";
        assert_eq!(detect_format(&raw(text)), Ok(ExportFormat::AndroidStyle));
    }

    #[test]
    fn empty_and_blank_exports() {
        assert_eq!(parse_export(&raw("")).unwrap_err(), ParseError::EmptyExport);
        assert_eq!(parse_export(&raw(" \n\t\n")).unwrap_err(), ParseError::EmptyExport);
    }

    #[test]
    fn two_user_messages() {
        let log = parse_export(&raw(
            "1/5/21, 10:01 - Alice: hi\n1/5/21, 10:02 - Bob: see https://youtu.be/x",
        ))
        .unwrap();
        let senders: Vec<_> = log.messages.iter().map(|m| m.sender_name.as_deref().unwrap()).collect();
        assert_eq!(senders, ["Alice", "Bob"]);
        assert!(log.messages.iter().all(|m| m.kind == MessageKind::User));
        assert_eq!(log.messages[1].body, "see https://youtu.be/x");
    }

    #[test]
    fn continuation_lines_fold_into_previous_body() {
        let log = parse_export(&raw("[1/5/21, 10:01:30] Alice: first line\nand more text")).unwrap();
        assert_eq!(log.messages.len(), 1);
        assert_eq!(log.messages[0].body, "first line\nand more text");
    }

    #[test]
    fn blank_continuation_lines_are_kept() {
        let log = parse_export(&raw("[1/5/21, 10:01:30] Alice: a\n\nb\n[1/5/21, 10:02:00] Bob: c\n")).unwrap();
        assert_eq!(log.messages[0].body, "a\n\nb");
        assert_eq!(log.messages[1].body, "c");
    }

    #[test]
    fn system_messages_have_no_sender() {
        let text = "\
[1/5/21, 10:00:00] Messages and calls are end-to-end encrypted. No one outside of this chat can read them.
[1/5/21, 10:00:01] Alice created group \"Trip\"
[1/5/21, 10:00:02] Alice added Bob
[1/5/21, 10:00:03] Alice changed the subject from \"Trip\" to \"Trip: 2021\"
[1/5/21, 10:01:30] Bob: hello
[1/5/21, 10:02:30] Carol left";
        let log = parse_export(&raw(text)).unwrap();
        let kinds: Vec<_> = log.messages.iter().map(|m| m.kind).collect();
        use MessageKind::*;
        assert_eq!(kinds, [System, System, System, System, User, System]);
        assert!(log
            .messages
            .iter()
            .all(|m| (m.kind == System) == m.sender_name.is_none()));
    }

    #[test]
    fn only_system_messages_is_an_error() {
        assert_eq!(
            parse_export(&raw("[1/5/21, 10:00:01] Alice created group \"Trip\"")).unwrap_err(),
            ParseError::NoUserMessages
        );
    }

    #[test]
    fn media_placeholders_are_user_messages() {
        let log = parse_export(&raw(
            "1/5/21, 10:01 - Alice: <Media omitted>\n1/5/21, 10:02 - Bob: <attached: 0001-PHOTO.jpg>\n",
        ))
        .unwrap();
        assert!(log.messages.iter().all(|m| m.kind == MessageKind::User));
        assert_eq!(log.messages[1].body, "<attached: 0001-PHOTO.jpg>");
    }

    #[test]
    fn other_dialect_headers_fold_as_continuations() {
        let log = parse_export(&raw(
            "1/5/21, 10:01 - A: x\n[1/5/21, 10:01:30] y\n1/5/21, 10:02 - B: z",
        ))
        .unwrap();
        assert_eq!(log.format, ExportFormat::AndroidStyle);
        assert_eq!(log.messages[0].body, "x\n[1/5/21, 10:01:30] y");
    }

    #[test]
    fn month_first_preferred_when_both_valid() {
        let log = parse_export(&raw("1/5/21, 10:01 - A: x\n2/5/21, 10:01 - A: y")).unwrap();
        assert_eq!(log.messages[0].date, ymd(2021, 1, 5));
        assert_eq!(log.messages[1].date, ymd(2021, 2, 5));
    }

    #[test]
    fn day_first_when_month_first_impossible() {
        let log = parse_export(&raw("1/5/21, 10:01 - A: x\n25/5/21, 10:01 - A: y")).unwrap();
        assert_eq!(log.messages[0].date, ymd(2021, 5, 1));
        assert_eq!(log.messages[1].date, ymd(2021, 5, 25));
    }

    #[test]
    fn dates_invalid_both_ways() {
        let err = parse_export(&raw("1/5/21, 10:01 - A: x\n13/13/21, 10:01 - A: y")).unwrap_err();
        assert_eq!(err, ParseError::InvalidDate { line: 2 });
    }

    #[test]
    fn twelve_hour_clock() {
        let log = parse_export(&raw("1/5/21, 12:05 AM - A: x\n1/5/21, 1:05\u{202f}PM - A: y")).unwrap();
        assert_eq!(log.messages[0].time_of_day, NaiveTime::from_hms_opt(0, 5, 0).unwrap());
        assert_eq!(log.messages[1].time_of_day, NaiveTime::from_hms_opt(13, 5, 0).unwrap());
    }

    #[test]
    fn four_digit_years() {
        let log = parse_export(&raw("[01/05/2021, 10:01:30] A: x")).unwrap();
        assert_eq!(log.messages[0].date, ymd(2021, 1, 5));
    }

    #[test]
    fn out_of_order_lines_are_sorted_but_keep_file_seq() {
        let log = parse_export(&raw("1/6/21, 10:00 - A: later\n1/5/21, 10:00 - B: earlier")).unwrap();
        assert_eq!(log.messages[0].body, "earlier");
        assert_eq!(log.messages[0].seq, 1);
        assert_eq!(log.messages[1].seq, 0);
    }

    #[test]
    fn invalid_utf8_is_replaced_and_reported() {
        let mut bytes = b"1/5/21, 10:01 - Alice: caf".to_vec();
        bytes.extend_from_slice(&[0xff, 0xfe]);
        let export = RawExport::from_bytes(&bytes, "x.txt");
        assert_eq!(export.replacement_count(), 2);
        let log = parse_export(&export).unwrap();
        assert_eq!(log.warnings, [ParseWarning::InvalidUtf8 { replaced: 2 }]);
        assert!(log.messages[0].body.ends_with('\u{fffd}'));
    }

    #[test]
    fn leading_lines_are_orphans() {
        let log = parse_export(&raw("\u{feff}preamble\n1/5/21, 10:01 - A: x")).unwrap();
        assert_eq!(log.warnings, [ParseWarning::OrphanLines { count: 1 }]);
    }

    #[test]
    fn configurable_phrases() {
        let parser = ExportParser::new(&ParserConfig {
            system_phrases: vec!["joined using this group's invite link".into()],
        });
        let log = parser
            .parse(&raw("1/5/21, 10:01 - Alice joined using this group's invite link\n1/5/21, 10:02 - Alice: hi"))
            .unwrap();
        assert_eq!(log.messages[0].kind, MessageKind::System);
    }

    #[test]
    fn debug_does_not_print_content() {
        let dbg = format!("{:?}", raw("1/5/21, 10:01 - Secret Name: hi"));
        assert!(!dbg.contains("Secret"));
    }
}
