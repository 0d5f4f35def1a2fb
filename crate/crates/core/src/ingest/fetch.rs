use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Transport-level failure of a single request.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("request timed out")]
    Timeout,
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
}

impl FetchError {
    /// 5xx, timeouts and connection failures are worth retrying.
    pub fn is_transient(&self) -> bool {
        match self {
            FetchError::Status(code) => *code >= 500,
            FetchError::Timeout | FetchError::Unreachable(_) => true,
        }
    }
}

/// Sends one SPARQL SELECT to an endpoint and returns the raw
/// `application/sparql-results+json` body.
pub trait ResultsFetcher: Send + Sync {
    fn fetch(&self, endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<u8>, FetchError>;
}

impl<F: ResultsFetcher + ?Sized> ResultsFetcher for Arc<F> {
    fn fetch(&self, endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<u8>, FetchError> {
        (**self).fetch(endpoint, query, timeout)
    }
}

impl<F: ResultsFetcher + ?Sized> ResultsFetcher for &F {
    fn fetch(&self, endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<u8>, FetchError> {
        (**self).fetch(endpoint, query, timeout)
    }
}

pub const SPARQL_RESULTS_JSON: &str = "application/sparql-results+json";

/// Queries longer than this many bytes are sent as a form POST.
pub const MAX_GET_QUERY_BYTES: usize = 2000;

/// SPARQL protocol over HTTP(S).
///
/// The blocking client owns its own runtime; build and call it off any
/// async executor thread.
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
    bearer_tokens: HashMap<String, String>,
}

impl HttpFetcher {
    pub fn new() -> Self {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("lodweaver/", env!("CARGO_PKG_VERSION")))
            .build()
            .expect("http client builds");
        HttpFetcher {
            client,
            bearer_tokens: HashMap::new(),
        }
    }

    /// Static bearer token sent with every request to `endpoint`.
    pub fn with_bearer_token(mut self, endpoint: impl Into<String>, token: impl Into<String>) -> Self {
        self.bearer_tokens.insert(endpoint.into(), token.into());
        self
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new()
    }
}

impl ResultsFetcher for HttpFetcher {
    fn fetch(&self, endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<u8>, FetchError> {
        let request = if query.len() > MAX_GET_QUERY_BYTES {
            self.client.post(endpoint).form(&[("query", query)])
        } else {
            self.client.get(endpoint).query(&[("query", query)])
        };
        let mut request = request
            .header(reqwest::header::ACCEPT, SPARQL_RESULTS_JSON)
            .timeout(timeout);
        if let Some(token) = self.bearer_tokens.get(endpoint) {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                FetchError::Timeout
            } else {
                FetchError::Unreachable(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Status(status.as_u16()));
        }
        response
            .bytes()
            .map(|b| b.to_vec())
            .map_err(|e| if e.is_timeout() { FetchError::Timeout } else { FetchError::Unreachable(e.to_string()) })
    }
}

/// Offline cache in front of another fetcher. Successful responses are
/// stored under `dir` keyed by a hash of endpoint and full query text; a
/// cached response is served without touching the network.
pub struct CachingFetcher<F> {
    inner: F,
    dir: PathBuf,
}

impl<F: ResultsFetcher> CachingFetcher<F> {
    pub fn new(inner: F, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(CachingFetcher { inner, dir })
    }

    fn path_for(&self, endpoint: &str, query: &str) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(endpoint.as_bytes());
        hasher.update(b"\n");
        hasher.update(query.as_bytes());
        self.dir.join(format!("{}.srj", hex::encode(hasher.finalize())))
    }
}

impl<F: ResultsFetcher> ResultsFetcher for CachingFetcher<F> {
    fn fetch(&self, endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<u8>, FetchError> {
        let path = self.path_for(endpoint, query);
        if let Ok(bytes) = fs::read(&path) {
            return Ok(bytes);
        }
        let bytes = self.inner.fetch(endpoint, query, timeout)?;
        if let Err(e) = fs::write(&path, &bytes) {
            log::warn!("cannot write cache entry {}: {e}", path.display());
        }
        Ok(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);

    impl ResultsFetcher for Counting {
        fn fetch(&self, _: &str, query: &str, _: Duration) -> Result<Vec<u8>, FetchError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            if query.contains("fail") {
                return Err(FetchError::Status(503));
            }
            Ok(query.as_bytes().to_vec())
        }
    }

    #[test]
    fn cache_serves_repeat_requests_offline() {
        let dir = tempfile::tempdir().unwrap();
        let inner = Arc::new(Counting(AtomicUsize::new(0)));
        let cache = CachingFetcher::new(inner.clone(), dir.path()).unwrap();
        let t = Duration::from_secs(1);
        assert_eq!(cache.fetch("http://e/", "q1", t).unwrap(), b"q1");
        assert_eq!(cache.fetch("http://e/", "q1", t).unwrap(), b"q1");
        assert_eq!(inner.0.load(Ordering::SeqCst), 1);
        assert!(cache.fetch("http://e/", "fail", t).is_err());
        assert!(cache.fetch("http://e/", "fail", t).is_err());
        assert_eq!(inner.0.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn transient_classification() {
        assert!(FetchError::Status(503).is_transient());
        assert!(FetchError::Timeout.is_transient());
        assert!(!FetchError::Status(400).is_transient());
    }
}
