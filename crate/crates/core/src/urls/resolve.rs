//! Following URL-shortener redirects.
//!
//! Only hosts on the shortener allowlist are ever contacted. A resolver does a
//! single hop per call; [`resolve_shortener`] drives the chain, detects loops
//! and enforces the depth limit.

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::header::LOCATION;
use reqwest::redirect::Policy;
use thiserror::Error;
use url::Url;

use super::domain::DomainReducer;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolveError {
    #[error("redirect loop at {url}")]
    RedirectLoop { url: String },
    #[error("could not resolve {url}: {reason}")]
    ResolutionFailed { url: String, reason: String },
}

/// One redirect hop.
///
/// Returns the absolute target of a redirect, or `None` when `url` does not
/// redirect. Implementations must bound each request with a timeout, must not
/// interpret response bodies, and must be safe to call from several threads.
pub trait RedirectResolver: Send + Sync {
    fn resolve(&self, url: &str) -> Result<Option<String>, ResolveError>;
}

/// Never redirects and never touches the network.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityResolver;

impl RedirectResolver for IdentityResolver {
    fn resolve(&self, _url: &str) -> Result<Option<String>, ResolveError> {
        Ok(None)
    }
}

/// Hosts treated as URL shorteners, plus shorteners with a fixed destination
/// that can be mapped without a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shorteners {
    hosts: HashSet<String>,
    static_aliases: HashMap<String, String>,
}

pub const DEFAULT_SHORTENERS: &[&str] = &[
    "bit.ly",
    "t.co",
    "tinyurl.com",
    "goo.gl",
    "ow.ly",
    "is.gd",
    "buff.ly",
    "youtu.be",
    "wa.me",
];

impl Default for Shorteners {
    fn default() -> Self {
        Shorteners::new(DEFAULT_SHORTENERS.iter().copied())
            .with_static_alias("youtu.be", "youtube.com")
    }
}

impl Shorteners {
    pub fn new<I, S>(hosts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Shorteners {
            hosts: hosts
                .into_iter()
                .map(|h| h.as_ref().trim().to_ascii_lowercase())
                .collect(),
            static_aliases: HashMap::new(),
        }
    }

    pub fn with_static_alias(mut self, host: &str, target_domain: &str) -> Self {
        let host = host.to_ascii_lowercase();
        self.hosts.insert(host.clone());
        self.static_aliases.insert(host, target_domain.to_ascii_lowercase());
        self
    }

    pub fn is_shortener_host(&self, host: &str) -> bool {
        self.hosts.contains(host)
    }

    /// Whether `url`'s host is on the allowlist.
    pub fn is_shortened(&self, url: &str) -> bool {
        DomainReducer::host_of(url).is_ok_and(|h| self.is_shortener_host(&h))
    }

    pub fn static_target(&self, url: &str) -> Option<&str> {
        let host = DomainReducer::host_of(url).ok()?;
        self.static_aliases.get(&host).map(String::as_str)
    }
}

/// Follows redirects from `url` while the current host is a shortener.
///
/// Non-shortener URLs come back unchanged without calling `resolver`. When the
/// depth limit is hit the last URL reached is returned.
pub fn resolve_shortener(
    url: &str,
    resolver: &dyn RedirectResolver,
    shorteners: &Shorteners,
    max_depth: usize,
) -> Result<String, ResolveError> {
    if let Some(target) = shorteners.static_target(url) {
        return Ok(format!("https://{target}/"));
    }
    let mut current = url.to_string();
    let mut visited = HashSet::from([current.clone()]);
    for _ in 0..max_depth.max(1) {
        if !shorteners.is_shortened(&current) {
            break;
        }
        match resolver.resolve(&current)? {
            Some(next) => {
                if !visited.insert(next.clone()) {
                    return Err(ResolveError::RedirectLoop { url: next });
                }
                current = next;
            }
            None => break,
        }
    }
    Ok(current)
}

/// Redirect resolver over HTTP. Sends `HEAD` (falling back to `GET` when the
/// server rejects `HEAD`), reads only the status and `Location` header, and
/// never follows redirects on its own.
pub struct HttpResolver {
    client: Client,
}

#[derive(Debug, Clone)]
pub struct HttpResolverBuilder {
    timeout: Duration,
    overrides: Vec<(String, SocketAddr)>,
}

impl HttpResolverBuilder {
    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Routes requests for `host` to `addr` instead of resolving it via DNS.
    pub fn resolve_host(mut self, host: &str, addr: SocketAddr) -> Self {
        self.overrides.push((host.to_string(), addr));
        self
    }

    pub fn build(self) -> Result<HttpResolver, ResolveError> {
        let mut builder = Client::builder()
            .redirect(Policy::none())
            .timeout(self.timeout)
            .connect_timeout(self.timeout)
            .no_proxy()
            .user_agent(concat!("ucds/", env!("CARGO_PKG_VERSION")));
        for (host, addr) in &self.overrides {
            builder = builder.resolve(host, *addr);
        }
        let client = builder.build().map_err(|e| ResolveError::ResolutionFailed {
            url: String::new(),
            reason: e.to_string(),
        })?;
        Ok(HttpResolver { client })
    }
}

impl HttpResolver {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

    pub fn builder() -> HttpResolverBuilder {
        HttpResolverBuilder {
            timeout: Self::DEFAULT_TIMEOUT,
            overrides: Vec::new(),
        }
    }

    fn failed(url: &str, reason: impl ToString) -> ResolveError {
        ResolveError::ResolutionFailed {
            url: url.to_string(),
            reason: reason.to_string(),
        }
    }
}

impl RedirectResolver for HttpResolver {
    fn resolve(&self, url: &str) -> Result<Option<String>, ResolveError> {
        let base = Url::parse(url).map_err(|e| Self::failed(url, e))?;
        let mut response = self.client.head(base.clone()).send().map_err(|e| Self::failed(url, e))?;
        if matches!(response.status().as_u16(), 405 | 501) {
            // Dropping the response without reading discards the body.
            response = self.client.get(base.clone()).send().map_err(|e| Self::failed(url, e))?;
        }
        if !response.status().is_redirection() {
            return Ok(None);
        }
        let Some(location) = response.headers().get(LOCATION) else {
            return Ok(None);
        };
        let location = location
            .to_str()
            .map_err(|_| Self::failed(url, "non-ascii Location header"))?;
        let next = base.join(location).map_err(|e| Self::failed(url, e))?;
        log::debug!("redirect hop resolved");
        Ok(Some(next.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct MapResolver {
        hops: HashMap<&'static str, &'static str>,
        calls: AtomicUsize,
    }

    impl MapResolver {
        fn new(hops: &[(&'static str, &'static str)]) -> Self {
            MapResolver {
                hops: hops.iter().copied().collect(),
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl RedirectResolver for MapResolver {
        fn resolve(&self, url: &str) -> Result<Option<String>, ResolveError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.hops.get(url).map(|s| s.to_string()))
        }
    }

    fn test_shorteners() -> Shorteners {
        Shorteners::new(["short.test"])
    }

    #[test]
    fn non_shortener_makes_no_calls() {
        let r = MapResolver::new(&[]);
        let out = resolve_shortener("https://example.com/a", &r, &test_shorteners(), 5).unwrap();
        assert_eq!(out, "https://example.com/a");
        assert_eq!(r.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn follows_chain_to_non_shortener() {
        let r = MapResolver::new(&[
            ("https://short.test/a", "https://short.test/b"),
            ("https://short.test/b", "https://long.test/page"),
        ]);
        let out = resolve_shortener("https://short.test/a", &r, &test_shorteners(), 5).unwrap();
        assert_eq!(out, "https://long.test/page");
        assert_eq!(r.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn detects_loops() {
        let r = MapResolver::new(&[
            ("https://short.test/a", "https://short.test/b"),
            ("https://short.test/b", "https://short.test/a"),
        ]);
        let err = resolve_shortener("https://short.test/a", &r, &test_shorteners(), 5).unwrap_err();
        assert!(matches!(err, ResolveError::RedirectLoop { .. }));
    }

    #[test]
    fn depth_limit_returns_last_hop() {
        let r = MapResolver::new(&[
            ("https://short.test/1", "https://short.test/2"),
            ("https://short.test/2", "https://short.test/3"),
            ("https://short.test/3", "https://long.test/"),
        ]);
        let out = resolve_shortener("https://short.test/1", &r, &test_shorteners(), 2).unwrap();
        assert_eq!(out, "https://short.test/3");
    }

    #[test]
    fn youtu_be_maps_statically() {
        let r = MapResolver::new(&[]);
        let out = resolve_shortener("https://youtu.be/xyz", &r, &Shorteners::default(), 5).unwrap();
        assert_eq!(out, "https://youtube.com/");
        assert_eq!(r.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn default_allowlist() {
        let s = Shorteners::default();
        for host in DEFAULT_SHORTENERS {
            assert!(s.is_shortened(&format!("https://{host}/x")), "{host}");
        }
        assert!(s.is_shortened("https://www.bit.ly/x"));
        assert!(!s.is_shortened("https://youtube.com/x"));
    }
}
