use std::sync::Arc;

use thiserror::Error;
use url::{Host, Url};

use super::suffix::SuffixList;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UrlError {
    #[error("unparseable url: {reason}")]
    UnparseableUrl { reason: &'static str },
}

fn unparseable(reason: &'static str) -> UrlError {
    UrlError::UnparseableUrl { reason }
}

/// Country-code suffixes (".tv") or whole domains ("youtu.be") that do not
/// count as ccTLD usage because the code is picked for its look, not its
/// country.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcTldExclusions {
    entries: Vec<String>,
}

impl Default for CcTldExclusions {
    fn default() -> Self {
        Self::new([".tv", ".io", ".me", ".ly", ".fm", ".co"])
    }
}

impl CcTldExclusions {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        CcTldExclusions {
            entries: entries
                .into_iter()
                .map(|e| e.as_ref().trim().to_ascii_lowercase())
                .filter(|e| !e.is_empty())
                .collect(),
        }
    }

    pub fn none() -> Self {
        CcTldExclusions { entries: Vec::new() }
    }

    pub fn excludes(&self, domain: &str) -> bool {
        self.entries.iter().any(|entry| {
            if entry.starts_with('.') {
                domain.ends_with(entry.as_str())
            } else {
                domain == entry || domain.ends_with(&format!(".{entry}"))
            }
        })
    }
}

/// The country-code suffix of a reduced domain, e.g. `".fr"` for
/// `lemonde.fr`, unless the domain is excluded.
pub fn classify_cctld(domain: &str, exclusions: &CcTldExclusions) -> Option<String> {
    let tld = domain.rsplit('.').next()?;
    let is_country = tld.len() == 2 && tld.bytes().all(|b| b.is_ascii_lowercase());
    (is_country && domain.contains('.') && !exclusions.excludes(domain)).then(|| format!(".{tld}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedDomain {
    pub domain: String,
    pub cc_tld: Option<String>,
}

/// Reduces URLs to their registrable domain.
#[derive(Debug, Clone)]
pub struct DomainReducer {
    suffixes: Arc<SuffixList>,
    exclusions: CcTldExclusions,
}

impl Default for DomainReducer {
    fn default() -> Self {
        DomainReducer::new(SuffixList::bundled(), CcTldExclusions::default())
    }
}

impl DomainReducer {
    pub fn new(suffixes: Arc<SuffixList>, exclusions: CcTldExclusions) -> Self {
        DomainReducer { suffixes, exclusions }
    }

    pub fn suffixes(&self) -> &SuffixList {
        &self.suffixes
    }

    pub fn exclusions(&self) -> &CcTldExclusions {
        &self.exclusions
    }

    /// Lowercased ASCII host of `url` with leading `www.` labels removed.
    ///
    /// Accepts full URLs, `www.`-prefixed links and bare hostnames.
    pub fn host_of(url: &str) -> Result<String, UrlError> {
        let url = url.trim();
        let authority = url.split(['/', '?', '#']).next().unwrap_or_default();
        if !url.contains("://") && authority.contains('@') {
            // "mailto:a@b.c" and friends, which would otherwise read as userinfo.
            return Err(unparseable("unsupported scheme"));
        }
        let parsed = if url.contains("://") {
            Url::parse(url)
        } else {
            Url::parse(&format!("http://{url}"))
        }
        .map_err(|_| unparseable("malformed url"))?;
        if !matches!(parsed.scheme(), "http" | "https") {
            return Err(unparseable("unsupported scheme"));
        }
        let host = match parsed.host() {
            Some(Host::Domain(d)) => d.trim_end_matches('.').to_ascii_lowercase(),
            Some(Host::Ipv4(_)) | Some(Host::Ipv6(_)) => return Err(unparseable("ip address host")),
            None => return Err(unparseable("missing host")),
        };
        let valid_label = |l: &str| {
            !l.is_empty()
                && l.len() <= 63
                && l.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
                && !l.starts_with('-')
                && !l.ends_with('-')
        };
        if host.is_empty() || !host.split('.').all(valid_label) {
            return Err(unparseable("malformed host"));
        }
        let mut host = host.as_str();
        while let Some(rest) = host.strip_prefix("www.") {
            host = rest;
        }
        Ok(host.to_string())
    }

    pub fn reduce(&self, url: &str) -> Result<ReducedDomain, UrlError> {
        let host = Self::host_of(url)?;
        let domain = self
            .suffixes
            .registrable_domain(&host)
            .ok_or_else(|| unparseable("host is a public suffix"))?
            .to_string();
        let cc_tld = classify_cctld(&domain, &self.exclusions);
        Ok(ReducedDomain { domain, cc_tld })
    }
}

/// Convenience wrapper over [`DomainReducer::reduce`].
pub fn reduce_to_domain(url: &str, reducer: &DomainReducer) -> Result<ReducedDomain, UrlError> {
    reducer.reduce(url)
}
