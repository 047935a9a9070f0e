use std::sync::OnceLock;

use regex::Regex;

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)\b(?:https?://|www\.)[^\s<>"]+"#).unwrap())
}

const TRAILING: &[char] = &['.', ',', ')', '!', '?'];

fn trim_trailing(mut candidate: &str) -> &str {
    while let Some(last) = candidate.chars().last() {
        if !TRAILING.contains(&last) {
            break;
        }
        // Keep a closing paren that balances one inside the URL, as in
        // wikipedia-style paths.
        if last == ')' && candidate.matches('(').count() >= candidate.matches(')').count() {
            break;
        }
        candidate = &candidate[..candidate.len() - 1];
    }
    candidate
}

/// Finds `http(s)://` and `www.` links in a message body, in order.
pub fn find_urls(body: &str) -> Vec<&str> {
    url_pattern()
        .find_iter(body)
        .map(|m| trim_trailing(m.as_str()))
        .filter(|u| {
            let lower = u.to_ascii_lowercase();
            !matches!(lower.as_str(), "http://" | "https://" | "www.")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn youtube_link_mid_sentence() {
        assert_eq!(
            find_urls("see https://www.youtube.com/watch?v=abc now"),
            ["https://www.youtube.com/watch?v=abc"]
        );
    }

    #[test]
    fn nothing_to_find() {
        assert!(find_urls("no links here").is_empty());
        assert!(find_urls("").is_empty());
    }

    #[test]
    fn strips_sentence_punctuation() {
        assert_eq!(find_urls("a (https://zoom.us/j/123)."), ["https://zoom.us/j/123"]);
        assert_eq!(find_urls("wow www.example.com/x!?"), ["www.example.com/x"]);
        assert_eq!(find_urls("http://a.io, http://b.io"), ["http://a.io", "http://b.io"]);
    }

    #[test]
    fn balanced_parens_survive() {
        assert_eq!(
            find_urls("https://en.wikipedia.org/wiki/Foo_(bar)"),
            ["https://en.wikipedia.org/wiki/Foo_(bar)"]
        );
    }

    #[test]
    fn case_insensitive_scheme_and_order() {
        assert_eq!(
            find_urls("HTTPS://B.example/x then WWW.a.example"),
            ["HTTPS://B.example/x", "WWW.a.example"]
        );
    }

    #[test]
    fn embedded_in_words_is_not_a_link() {
        assert!(find_urls("awww.nope").is_empty());
        assert!(find_urls("just https:// nothing").is_empty());
    }
}
