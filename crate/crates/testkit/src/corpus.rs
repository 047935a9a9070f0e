//! Synthetic chat exports with known ground truth.
//!
//! Every export is rendered from a list of [`ExpectedMessage`]s, so tests can
//! compare parser output against what was generated rather than against a
//! second parser.

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Android,
    Ios,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateOrder {
    MonthFirst,
    DayFirst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedMessage {
    pub date: NaiveDate,
    pub time: NaiveTime,
    /// `None` for system messages.
    pub sender: Option<String>,
    pub body: String,
    /// Links planted in the body with the registrable domain each should
    /// reduce to.
    pub links: Vec<(String, String)>,
}

impl ExpectedMessage {
    pub fn is_system(&self) -> bool {
        self.sender.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedExport {
    pub text: String,
    pub dialect: Dialect,
    pub date_order: DateOrder,
    pub messages: Vec<ExpectedMessage>,
    /// Distinct user senders in order of first user message.
    pub senders: Vec<String>,
    /// Names that appear anywhere in the file, including system lines.
    pub all_names: Vec<String>,
    pub phone_numbers: Vec<String>,
}

impl GeneratedExport {
    pub fn user_count(&self) -> usize {
        self.messages.iter().filter(|m| !m.is_system()).count()
    }

    pub fn system_count(&self) -> usize {
        self.messages.iter().filter(|m| m.is_system()).count()
    }

    /// Every line of the file that is not a message header.
    pub fn continuation_lines(&self) -> Vec<&str> {
        self.messages
            .iter()
            .flat_map(|m| m.body.split('\n').skip(1))
            .collect()
    }

    pub fn planted_domains(&self) -> Vec<&str> {
        self.messages
            .iter()
            .flat_map(|m| m.links.iter().map(|(_, d)| d.as_str()))
            .collect()
    }
}

const FIRST_NAMES: &[&str] = &[
    "Quorra", "Thadeus", "Zoë", "Ximena", "Oluwaseun", "Bartholomew", "Łukasz", "Yevgenia", "Ingrid",
    "Marisol", "Kwabena", "Émilie", "Søren", "Priyanka", "Anastasios", "Wilhelmina", "Torvald",
    "Giedre", "Henrique", "Mirela",
];

const LAST_NAMES: &[&str] = &[
    "Vantablack", "Okonkwo", "Ångström", "Fitzwilliam", "Castellanos", "Zielinski", "Abernathy",
    "Nakamura-Reyes", "Lindqvist", "Quisenberry", "Delacroix", "Hargreaves",
];

const SYLLABLES: &[&str] = &[
    "zor", "vak", "plim", "tu", "quen", "dra", "bix", "mol", "kest", "ur", "fay", "gno", "wib", "lox",
    "sprun", "ja", "trel", "ozz", "nym", "chak",
];

/// (link as typed, registrable domain it reduces to offline)
pub const LINK_POOL: &[(&str, &str)] = &[
    ("https://www.youtube.com/watch?v=dQw4w9WgXcQ", "youtube.com"),
    ("https://youtu.be/dQw4w9WgXcQ", "youtube.com"),
    ("https://us02web.zoom.us/j/85012345678?pwd=Zm9vYmFy", "zoom.us"),
    ("https://news.bbc.co.uk/2/hi/uk_news/7812345.stm", "bbc.co.uk"),
    ("www.lemonde.fr/politique/article/2021/05/01/secret-slug_123.html", "lemonde.fr"),
    ("https://docs.google.com/document/d/1AbCdEfGhIjKlMnOp/edit", "google.com"),
    ("https://twitter.com/someone_private/status/1388888888888888888", "twitter.com"),
    ("https://www.twitch.tv/privatestreamer", "twitch.tv"),
    ("https://bit.ly/3xYzAbC", "bit.ly"),
    ("http://elpais.es/internacional/2021-05-01/nota.html", "elpais.es"),
    ("https://en.wikipedia.org/wiki/Mole_(animal)", "wikipedia.org"),
    ("https://www.amazon.co.jp/dp/B08N5WRWNW", "amazon.co.jp"),
    ("https://wa.me/15558675309", "wa.me"),
    ("https://yandex.ru/search/?text=zorvak", "yandex.ru"),
    ("https://cs.uchicago.edu/people/", "uchicago.edu"),
];

const PHONES: &[&str] = &["+1 555-867-5309", "(312) 555-0199", "07700 900461", "5558675309", "+44 20 7946 0958"];

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=7);
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

fn name(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.2) {
        FIRST_NAMES.choose(rng).unwrap().to_string()
    } else {
        format!("{} {}", FIRST_NAMES.choose(rng).unwrap(), LAST_NAMES.choose(rng).unwrap())
    }
}

struct Style {
    dialect: Dialect,
    order: DateOrder,
    four_digit_year: bool,
    twelve_hour: bool,
}

fn format_date(style: &Style, date: NaiveDate) -> String {
    use chrono::Datelike;
    let (a, b) = match style.order {
        DateOrder::MonthFirst => (date.month(), date.day()),
        DateOrder::DayFirst => (date.day(), date.month()),
    };
    if style.four_digit_year {
        format!("{a:02}/{b:02}/{}", date.year())
    } else {
        format!("{a}/{b}/{:02}", date.year() % 100)
    }
}

fn format_time(style: &Style, time: NaiveTime, seconds: bool) -> String {
    let (h, suffix) = if style.twelve_hour {
        let (pm, h12) = time.hour12();
        (h12, if pm { " PM" } else { " AM" })
    } else {
        (time.hour(), "")
    };
    if seconds {
        format!("{h:02}:{:02}:{:02}{suffix}", time.minute(), time.second())
    } else {
        format!("{h}:{:02}{suffix}", time.minute())
    }
}

fn header(style: &Style, msg: &ExpectedMessage) -> String {
    let rest = match &msg.sender {
        Some(sender) => format!("{sender}: "),
        None => String::new(),
    };
    match style.dialect {
        Dialect::Android => format!(
            "{}, {} - {rest}",
            format_date(style, msg.date),
            format_time(style, msg.time, false)
        ),
        Dialect::Ios => format!(
            "[{}, {}] {rest}",
            format_date(style, msg.date),
            format_time(style, msg.time, true)
        ),
    }
}

/// Generates one export from `seed`.
pub fn generate(seed: u64) -> GeneratedExport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dialect = if rng.gen_bool(0.5) { Dialect::Ios } else { Dialect::Android };
    let order = if rng.gen_bool(0.5) { DateOrder::DayFirst } else { DateOrder::MonthFirst };
    let style = Style {
        dialect,
        order,
        four_digit_year: rng.gen_bool(0.3),
        twelve_hour: rng.gen_bool(0.3),
    };

    let mut people: Vec<String> = Vec::new();
    let member_count = if rng.gen_bool(0.75) { 2 } else { rng.gen_range(1..=8) };
    while people.len() < member_count {
        let n = name(&mut rng);
        if !people.contains(&n) {
            people.push(n);
        }
    }

    // Day-first files need one day > 12 so the order is recoverable.
    let start_day = if order == DateOrder::DayFirst { rng.gen_range(13..=28) } else { rng.gen_range(1..=28) };
    let start = NaiveDate::from_ymd_opt(rng.gen_range(2015..=2023), rng.gen_range(1..=12), start_day).unwrap();
    let android_seconds_zero = dialect == Dialect::Android;
    let mut clock = NaiveDateTime::new(start, NaiveTime::from_hms_opt(rng.gen_range(0..24), rng.gen_range(0..60), 0).unwrap());
    let total = rng.gen_range(1..=40);

    let mut messages = Vec::new();
    let mut phones = Vec::new();
    // Look-alike headers must stay a minority or dialect detection flips.
    let mut fake_headers = 0usize;
    if rng.gen_bool(0.5) {
        messages.push(ExpectedMessage {
            date: clock.date(),
            time: clock.time(),
            sender: None,
            body: "Messages and calls are end-to-end encrypted. No one outside of this chat, not even WhatsApp, can read or listen to them.".into(),
            links: vec![],
        });
    }
    for i in 0..total {
        let step = match rng.gen_range(0..10) {
            // The first message keeps the start date.
            _ if i == 0 => Duration::zero(),
            0..=5 => Duration::seconds(rng.gen_range(0..600)),
            6..=8 => Duration::hours(rng.gen_range(1..48)),
            _ => Duration::days(rng.gen_range(1..200)),
        };
        clock += step;
        let mut time = clock.time();
        if android_seconds_zero {
            time = time.with_second(0).unwrap();
        }
        let date = clock.date();
        let who = people.choose(&mut rng).unwrap().clone();

        if rng.gen_bool(0.08) {
            let other = people.choose(&mut rng).unwrap();
            let body = match rng.gen_range(0..4) {
                0 => format!("{who} created group \"{}\"", word(&mut rng)),
                1 => format!("{who} added {other}"),
                2 => format!("{who} left"),
                _ => format!("{who} changed the subject from \"{}\" to \"{}: {}\"", word(&mut rng), word(&mut rng), word(&mut rng)),
            };
            messages.push(ExpectedMessage {
                date,
                time,
                sender: None,
                body,
                links: vec![],
            });
            continue;
        }

        let mut links = Vec::new();
        let mut body = match rng.gen_range(0..20) {
            0 => "<Media omitted>".to_string(),
            1 => format!("<attached: {:08}-PHOTO-{}.jpg>", rng.gen_range(0..99999), date),
            2 => format!("call me {}", PHONES.choose(&mut rng).unwrap()),
            3..=6 => {
                let n = if rng.gen_bool(0.15) { 2 } else { 1 };
                let mut parts = vec![sentence(&mut rng)];
                for _ in 0..n {
                    let (link, domain) = LINK_POOL.choose(&mut rng).unwrap();
                    links.push((link.to_string(), domain.to_string()));
                    let wrapped = match rng.gen_range(0..3) {
                        0 => format!("({link})."),
                        1 => format!("{link},"),
                        _ => link.to_string(),
                    };
                    parts.push(wrapped);
                    parts.push(sentence(&mut rng));
                }
                parts.join(" ")
            }
            _ => sentence(&mut rng),
        };
        if body.starts_with("call me") {
            phones.push(body.trim_start_matches("call me ").to_string());
        }
        // Multiline bodies, sometimes with blank lines or a line that looks
        // like the other dialect's header.
        if rng.gen_bool(0.2) {
            for _ in 0..rng.gen_range(1..=3) {
                body.push('\n');
                match rng.gen_range(0..6) {
                    0 => {}
                    1 if 2 * (fake_headers + 1) < messages.len() => {
                        fake_headers += 1;
                        let other = Style {
                            dialect: if dialect == Dialect::Ios { Dialect::Android } else { Dialect::Ios },
                            order,
                            four_digit_year: style.four_digit_year,
                            twelve_hour: style.twelve_hour,
                        };
                        let fake = ExpectedMessage {
                            date,
                            time,
                            sender: Some(word(&mut rng)),
                            body: String::new(),
                            links: vec![],
                        };
                        body.push_str(&header(&other, &fake));
                        body.push_str(&word(&mut rng));
                    }
                    _ => body.push_str(&sentence(&mut rng)),
                }
            }
        }
        messages.push(ExpectedMessage {
            date,
            time,
            sender: Some(who),
            body,
            links,
        });
    }

    if !messages.iter().any(|m| !m.is_system()) {
        messages.push(ExpectedMessage {
            date: clock.date(),
            time: if android_seconds_zero { clock.time().with_second(0).unwrap() } else { clock.time() },
            sender: Some(people[0].clone()),
            body: sentence(&mut rng),
            links: vec![],
        });
    }

    let mut text = String::new();
    for m in &messages {
        text.push_str(&header(&style, m));
        text.push_str(&m.body);
        text.push('\n');
    }
    let mut senders: Vec<String> = Vec::new();
    for m in &messages {
        if let Some(s) = &m.sender {
            if !senders.contains(s) {
                senders.push(s.clone());
            }
        }
    }
    GeneratedExport {
        text,
        dialect,
        date_order: order,
        messages,
        senders,
        all_names: people,
        phone_numbers: phones,
    }
}

/// `n` exports from consecutive seeds.
pub fn corpus(n: usize, seed: u64) -> Vec<GeneratedExport> {
    (0..n as u64).map(|i| generate(seed.wrapping_mul(1_000_003).wrapping_add(i))).collect()
}
