//! Public-suffix rule matching.
//!
//! The bundled rule set is a verbatim snapshot of the public suffix list
//! (`data/public_suffix_list.dat`). To update it, replace that file with the
//! current list from publicsuffix.org and rebuild; no code changes are needed.
//! Only the ICANN section is used by default, so hosting-provider entries such
//! as `github.io` do not turn every user site into its own registrable domain.

use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

const BUNDLED: &str = include_str!("../../data/public_suffix_list.dat");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sections {
    IcannOnly,
    All,
}

#[derive(Debug, Default, Clone)]
pub struct SuffixList {
    exact: HashSet<String>,
    /// Parents of `*.parent` rules.
    wildcard: HashSet<String>,
    /// Targets of `!exception` rules.
    exception: HashSet<String>,
}

impl SuffixList {
    pub fn parse(text: &str, sections: Sections) -> Self {
        let mut list = SuffixList::default();
        let mut in_private = false;
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with("// ===BEGIN PRIVATE DOMAINS===") {
                in_private = true;
                continue;
            }
            if line.starts_with("// ===END PRIVATE DOMAINS===") {
                in_private = false;
                continue;
            }
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if in_private && sections == Sections::IcannOnly {
                continue;
            }
            // Rules end at the first whitespace.
            let rule = line.split_whitespace().next().unwrap_or_default();
            list.add_rule(rule);
        }
        list
    }

    fn add_rule(&mut self, rule: &str) {
        let (set, name) = if let Some(rest) = rule.strip_prefix('!') {
            (&mut self.exception, rest)
        } else if let Some(rest) = rule.strip_prefix("*.") {
            (&mut self.wildcard, rest)
        } else {
            (&mut self.exact, rule)
        };
        let Ok(ascii) = idna::domain_to_ascii(name) else {
            log::warn!("skipping unparseable suffix rule {rule:?}");
            return;
        };
        set.insert(ascii);
    }

    /// The shared, lazily parsed bundled snapshot.
    pub fn bundled() -> Arc<SuffixList> {
        static LIST: OnceLock<Arc<SuffixList>> = OnceLock::new();
        LIST.get_or_init(|| Arc::new(SuffixList::parse(BUNDLED, Sections::IcannOnly)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.wildcard.len() + self.exception.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of trailing labels of `host` forming its public suffix.
    ///
    /// `host` must be lowercase ASCII without a trailing dot. Unlisted TLDs
    /// fall back to the implicit `*` rule (one label).
    pub fn suffix_label_count(&self, host: &str) -> usize {
        let labels: Vec<&str> = host.split('.').collect();
        for start in 0..labels.len() {
            let candidate = labels[start..].join(".");
            let remaining = labels.len() - start;
            if self.exception.contains(&candidate) {
                return remaining - 1;
            }
            if self.exact.contains(&candidate) {
                return remaining;
            }
            if remaining > 1 && self.wildcard.contains(&labels[start + 1..].join(".")) {
                return remaining;
            }
        }
        1
    }

    pub fn public_suffix<'a>(&self, host: &'a str) -> &'a str {
        let n = self.suffix_label_count(host);
        tail_labels(host, n)
    }

    /// Public suffix plus one label, or `None` if `host` is itself a suffix.
    pub fn registrable_domain<'a>(&self, host: &'a str) -> Option<&'a str> {
        let n = self.suffix_label_count(host);
        (host.split('.').count() > n).then(|| tail_labels(host, n + 1))
    }
}

fn tail_labels(host: &str, n: usize) -> &str {
    let mut dots = 0;
    for (i, b) in host.bytes().enumerate().rev() {
        if b == b'.' {
            dots += 1;
            if dots == n {
                return &host[i + 1..];
            }
        }
    }
    host
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list() -> SuffixList {
        SuffixList::parse(
            "com\nuk\nco.uk\njp\n*.kawasaki.jp\n!city.kawasaki.jp\n// ===BEGIN PRIVATE DOMAINS===\ngithub.io\n// ===END PRIVATE DOMAINS===\n",
            Sections::IcannOnly,
        )
    }

    #[test]
    fn exact_rules() {
        let l = list();
        assert_eq!(l.registrable_domain("news.bbc.co.uk"), Some("bbc.co.uk"));
        assert_eq!(l.registrable_domain("a.b.example.com"), Some("example.com"));
        assert_eq!(l.public_suffix("example.com"), "com");
        assert_eq!(l.registrable_domain("co.uk"), None);
    }

    #[test]
    fn wildcard_and_exception() {
        let l = list();
        assert_eq!(l.registrable_domain("www.foo.kawasaki.jp"), Some("www.foo.kawasaki.jp"));
        assert_eq!(l.registrable_domain("foo.kawasaki.jp"), None);
        assert_eq!(l.registrable_domain("www.city.kawasaki.jp"), Some("city.kawasaki.jp"));
    }

    #[test]
    fn unlisted_tld_uses_default_rule() {
        assert_eq!(list().registrable_domain("a.short.test"), Some("short.test"));
    }

    #[test]
    fn private_section_is_optional() {
        assert_eq!(list().registrable_domain("me.github.io"), Some("github.io"));
        let all = SuffixList::parse("io\n// ===BEGIN PRIVATE DOMAINS===\ngithub.io\n", Sections::All);
        assert_eq!(all.registrable_domain("me.github.io"), Some("me.github.io"));
    }

    #[test]
    fn bundled_snapshot_loads() {
        let l = SuffixList::bundled();
        assert!(l.len() > 5000);
        assert_eq!(l.registrable_domain("news.bbc.co.uk"), Some("bbc.co.uk"));
        // IDN rules are stored in punycode.
        assert_eq!(l.public_suffix("xn--85x722f.xn--55qx5d.cn"), "xn--55qx5d.cn");
    }
}
