//! From message bodies to registrable domains.

mod domain;
mod find;
mod resolve;
mod suffix;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use domain::{classify_cctld, reduce_to_domain, CcTldExclusions, DomainReducer, ReducedDomain, UrlError};
pub use find::find_urls;
pub use resolve::{
    resolve_shortener, HttpResolver, HttpResolverBuilder, IdentityResolver, RedirectResolver, ResolveError,
    Shorteners, DEFAULT_SHORTENERS,
};
pub use suffix::{Sections, SuffixList};

use crate::anonymize::Alias;

/// A shared link reduced to its registrable domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlRecord {
    #[serde(rename = "seq")]
    pub message_seq: usize,
    pub domain: String,
    pub cc_tld: Option<String>,
    pub was_shortened: bool,
    pub alias: Alias,
    pub date: NaiveDate,
}

/// A link found in a message, before resolution and reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoundUrl {
    pub message_seq: usize,
    pub alias: Alias,
    pub date: NaiveDate,
    pub url: String,
}

/// Local-only tallies of what happened to links during extraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UrlDiagnostics {
    /// Links dropped because no registrable domain could be derived.
    pub unparseable: usize,
    /// Shortened links kept as the shortener's own domain.
    pub degraded: usize,
    pub redirect_loops: usize,
    pub resolution_failures: usize,
    /// Resolver calls issued, one per chain started.
    pub resolutions_started: usize,
}

#[derive(Debug, Clone)]
pub struct UrlPipelineConfig {
    pub shorteners: Shorteners,
    pub cc_exclusions: CcTldExclusions,
    pub max_depth: usize,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Disables every resolver call; shortened links degrade.
    pub offline: bool,
}

impl Default for UrlPipelineConfig {
    fn default() -> Self {
        UrlPipelineConfig {
            shorteners: Shorteners::default(),
            cc_exclusions: CcTldExclusions::default(),
            max_depth: 5,
            timeout: HttpResolver::DEFAULT_TIMEOUT,
            max_in_flight: 4,
            offline: false,
        }
    }
}

pub struct UrlPipeline {
    config: UrlPipelineConfig,
    reducer: DomainReducer,
    resolver: Arc<dyn RedirectResolver>,
}

impl UrlPipeline {
    pub fn new(config: UrlPipelineConfig, resolver: Arc<dyn RedirectResolver>) -> Self {
        let reducer = DomainReducer::new(SuffixList::bundled(), config.cc_exclusions.clone());
        UrlPipeline {
            config,
            reducer,
            resolver,
        }
    }

    /// Fully offline pipeline with default settings.
    pub fn offline() -> Self {
        UrlPipeline::new(
            UrlPipelineConfig {
                offline: true,
                ..Default::default()
            },
            Arc::new(IdentityResolver),
        )
    }

    /// Default settings backed by [`HttpResolver`].
    pub fn with_http(config: UrlPipelineConfig) -> Result<Self, ResolveError> {
        let resolver = HttpResolver::builder().timeout(config.timeout).build()?;
        Ok(UrlPipeline::new(config, Arc::new(resolver)))
    }

    pub fn config(&self) -> &UrlPipelineConfig {
        &self.config
    }

    pub fn reducer(&self) -> &DomainReducer {
        &self.reducer
    }

    /// Resolves every distinct shortened link, at most `max_in_flight` at a
    /// time.
    fn resolve_all(&self, urls: Vec<&str>, diagnostics: &mut UrlDiagnostics) -> HashMap<String, Result<String, ResolveError>> {
        let shorteners = &self.config.shorteners;
        let mut results = HashMap::new();
        let mut pending = Vec::new();
        for url in urls {
            if results.contains_key(url) || pending.contains(&url) {
                continue;
            }
            if let Some(target) = shorteners.static_target(url) {
                results.insert(url.to_string(), Ok(format!("https://{target}/")));
            } else if self.config.offline {
                results.insert(
                    url.to_string(),
                    Err(ResolveError::ResolutionFailed {
                        url: url.to_string(),
                        reason: "offline".into(),
                    }),
                );
            } else {
                pending.push(url);
            }
        }
        if pending.is_empty() {
            return results;
        }
        diagnostics.resolutions_started += pending.len();

        let next = AtomicUsize::new(0);
        let resolved = Mutex::new(Vec::with_capacity(pending.len()));
        let workers = self.config.max_in_flight.clamp(1, pending.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(url) = pending.get(i) else { break };
                    let outcome = resolve_shortener(url, self.resolver.as_ref(), shorteners, self.config.max_depth);
                    resolved.lock().unwrap().push((url.to_string(), outcome));
                });
            }
        });
        results.extend(resolved.into_inner().unwrap());
        results
    }

    /// Turns found links into records, in input order.
    ///
    /// Shortener failures degrade to the shortener's own domain. Links whose
    /// host cannot be reduced are dropped and tallied.
    pub fn process(&self, found: &[FoundUrl]) -> (Vec<UrlRecord>, UrlDiagnostics) {
        let mut diagnostics = UrlDiagnostics::default();
        let shortened: Vec<&str> = found
            .iter()
            .map(|f| f.url.as_str())
            .filter(|u| self.config.shorteners.is_shortened(u))
            .collect();
        let resolutions = self.resolve_all(shortened, &mut diagnostics);

        let mut records = Vec::with_capacity(found.len());
        for f in found {
            let (target, was_shortened) = match resolutions.get(&f.url) {
                None => (f.url.clone(), false),
                Some(Ok(target)) => (target.clone(), true),
                Some(Err(err)) => {
                    match err {
                        ResolveError::RedirectLoop { .. } => diagnostics.redirect_loops += 1,
                        ResolveError::ResolutionFailed { .. } => diagnostics.resolution_failures += 1,
                    }
                    diagnostics.degraded += 1;
                    (f.url.clone(), true)
                }
            };
            // A resolved target that cannot be reduced falls back to the
            // shortener itself.
            let reduced = self
                .reducer
                .reduce(&target)
                .or_else(|e| if target != f.url { self.reducer.reduce(&f.url) } else { Err(e) });
            match reduced {
                Ok(ReducedDomain { domain, cc_tld }) => records.push(UrlRecord {
                    message_seq: f.message_seq,
                    domain,
                    cc_tld,
                    was_shortened,
                    alias: f.alias,
                    date: f.date,
                }),
                Err(_) => diagnostics.unparseable += 1,
            }
        }
        (records, diagnostics)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct CountingResolver {
        hops: HashMap<String, String>,
        calls: AtomicUsize,
    }

    impl RedirectResolver for CountingResolver {
        fn resolve(&self, url: &str) -> Result<Option<String>, ResolveError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.hops.get(url).cloned())
        }
    }

    fn found(seq: usize, url: &str) -> FoundUrl {
        FoundUrl {
            message_seq: seq,
            alias: Alias(0),
            date: NaiveDate::from_ymd_opt(2021, 5, 1).unwrap(),
            url: url.into(),
        }
    }

    fn pipeline(offline: bool, hops: &[(&str, &str)]) -> (UrlPipeline, Arc<CountingResolver>) {
        let resolver = Arc::new(CountingResolver {
            hops: hops.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            calls: AtomicUsize::new(0),
        });
        let config = UrlPipelineConfig {
            offline,
            ..Default::default()
        };
        (UrlPipeline::new(config, resolver.clone()), resolver)
    }

    #[test]
    fn resolves_and_reduces_in_order() {
        let (p, r) = pipeline(false, &[("https://bit.ly/abc", "https://www.lemonde.fr/article")]);
        let (records, diag) = p.process(&[
            found(3, "https://bit.ly/abc"),
            found(4, "https://youtu.be/q"),
            found(4, "www.twitch.tv/someone"),
            found(7, "http://192.168.0.1/admin"),
        ]);
        let got: Vec<_> = records
            .iter()
            .map(|r| (r.message_seq, r.domain.as_str(), r.cc_tld.as_deref(), r.was_shortened))
            .collect();
        assert_eq!(
            got,
            [
                (3, "lemonde.fr", Some(".fr"), true),
                (4, "youtube.com", None, true),
                (4, "twitch.tv", None, false)
            ]
        );
        assert_eq!(diag.unparseable, 1);
        assert_eq!(r.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn offline_never_calls_resolver() {
        let (p, r) = pipeline(true, &[("https://bit.ly/abc", "https://example.org/")]);
        let (records, diag) = p.process(&[found(0, "https://bit.ly/abc"), found(1, "https://youtu.be/x")]);
        assert_eq!(r.calls.load(Ordering::SeqCst), 0);
        assert_eq!(records[0].domain, "bit.ly");
        assert!(records[0].was_shortened);
        assert_eq!(records[1].domain, "youtube.com");
        assert_eq!(diag.degraded, 1);
    }

    #[test]
    fn duplicate_short_links_resolve_once() {
        let (p, r) = pipeline(false, &[("https://t.co/x", "https://example.org/")]);
        let (records, _) = p.process(&[found(0, "https://t.co/x"), found(1, "https://t.co/x")]);
        assert_eq!(records.len(), 2);
        assert_eq!(r.calls.load(Ordering::SeqCst), 1);
    }
}
