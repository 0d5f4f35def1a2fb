//! Canned SPARQL endpoint for offline runs and tests.
//!
//! A data directory holds one subdirectory per source; the source of a
//! request is the first path segment of the endpoint URL
//! (`http://host:port/<source>/sparql`). Each source directory may contain
//!
//! * `canned.json`: an array of `{query, results, fail_times?, fail_mode?}`;
//! * `<fingerprint>.json`: a results document for that fingerprint;
//! * `script.json`: `{down?, unknown_query?: "error" | "empty"}`.
//!
//! Requests are matched by fingerprint: SHA-256 of the query text with
//! `LIMIT n` / `OFFSET n` removed and whitespace collapsed. The canned
//! table is then sliced by the request's own LIMIT and OFFSET.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Duration;

use axum::extract::{Form, Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use regex::Regex;
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{FetchError, ResultsFetcher, SPARQL_RESULTS_JSON};

fn limit_offset_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(LIMIT|OFFSET)\s+(\d+)").unwrap())
}

/// The query with LIMIT/OFFSET clauses removed and whitespace collapsed.
pub fn normalize_query(query: &str) -> String {
    let stripped = limit_offset_re().replace_all(query, " ");
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn fingerprint(query: &str) -> String {
    hex::encode(Sha256::digest(normalize_query(query).as_bytes()))
}

/// The last LIMIT and OFFSET values of a query.
fn limit_offset(query: &str) -> (Option<usize>, usize) {
    let mut limit = None;
    let mut offset = 0;
    for cap in limit_offset_re().captures_iter(query) {
        let n = cap[2].parse().unwrap_or(usize::MAX);
        if cap[1].eq_ignore_ascii_case("LIMIT") {
            limit = Some(n);
        } else {
            offset = n;
        }
    }
    (limit, offset)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailMode {
    #[default]
    Status503,
    Timeout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownQuery {
    #[default]
    Error,
    Empty,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Script {
    #[serde(default)]
    down: bool,
    #[serde(default)]
    unknown_query: UnknownQuery,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CannedEntry {
    query: String,
    results: Value,
    #[serde(default)]
    fail_times: u32,
    #[serde(default)]
    fail_mode: FailMode,
}

#[derive(Debug)]
struct Canned {
    results: Value,
    fail_times: u32,
    fail_mode: FailMode,
}

#[derive(Debug, Default)]
struct Source {
    script: Script,
    canned: HashMap<String, Canned>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture data {path}: {reason}")]
    Invalid { path: String, reason: String },
}

/// What the endpoint answers to one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureResponse {
    Results(Vec<u8>),
    Status(u16, String),
    Timeout,
    Down,
}

/// All canned sources, with per-query failure counters.
#[derive(Debug, Default)]
pub struct FixtureData {
    sources: BTreeMap<String, Source>,
    failures_served: Mutex<HashMap<(String, String), u32>>,
}

fn invalid(path: &Path, reason: impl ToString) -> FixtureError {
    FixtureError::Invalid {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

fn check_results(path: &Path, v: &Value) -> Result<(), FixtureError> {
    if v.pointer("/results/bindings").and_then(Value::as_array).is_none() {
        return Err(invalid(path, "results document lacks results.bindings"));
    }
    Ok(())
}

impl FixtureData {
    pub fn load(dir: &Path) -> Result<Self, FixtureError> {
        let entries = fs::read_dir(dir).map_err(|e| invalid(dir, e))?;
        let mut data = FixtureData::default();
        for entry in entries {
            let entry = entry.map_err(|e| invalid(dir, e))?;
            if !entry.path().is_dir() {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            data.sources.insert(name, load_source(&entry.path())?);
        }
        if data.sources.is_empty() {
            return Err(invalid(dir, "no source directories"));
        }
        Ok(data)
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.sources.keys().map(String::as_str)
    }

    /// Marks a source as down (or back up).
    pub fn set_down(&mut self, source: &str, down: bool) {
        self.sources.entry(source.to_string()).or_default().script.down = down;
    }

    pub fn respond(&self, source: &str, query: &str) -> FixtureResponse {
        let Some(src) = self.sources.get(source) else {
            return FixtureResponse::Status(404, format!("unknown fixture source {source}\n"));
        };
        if src.script.down {
            return FixtureResponse::Down;
        }
        let fp = fingerprint(query);
        let Some(canned) = src.canned.get(&fp) else {
            return match src.script.unknown_query {
                UnknownQuery::Empty => FixtureResponse::Results(empty_results()),
                UnknownQuery::Error => FixtureResponse::Status(
                    400,
                    format!(
                        "unknown query fingerprint {fp}\nnormalized query:\n{}\n",
                        normalize_query(query)
                    ),
                ),
            };
        };
        if canned.fail_times > 0 {
            let mut served = self.failures_served.lock().unwrap();
            let n = served.entry((source.to_string(), fp)).or_insert(0);
            if *n < canned.fail_times {
                *n += 1;
                return match canned.fail_mode {
                    FailMode::Status503 => FixtureResponse::Status(503, "scripted failure\n".into()),
                    FailMode::Timeout => FixtureResponse::Timeout,
                };
            }
        }
        FixtureResponse::Results(slice(&canned.results, query))
    }
}

fn load_source(dir: &Path) -> Result<Source, FixtureError> {
    let mut src = Source::default();
    let read_json = |path: &Path| -> Result<Value, FixtureError> {
        let text = fs::read_to_string(path).map_err(|e| invalid(path, e))?;
        serde_json::from_str(&text).map_err(|e| invalid(path, e))
    };
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| invalid(dir, e))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .collect();
    files.sort();
    for path in files {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if name == "script.json" {
            src.script = serde_json::from_value(read_json(&path)?).map_err(|e| invalid(&path, e))?;
        } else if name == "canned.json" {
            let entries: Vec<CannedEntry> =
                serde_json::from_value(read_json(&path)?).map_err(|e| invalid(&path, e))?;
            for e in entries {
                check_results(&path, &e.results)?;
                let fp = fingerprint(&e.query);
                let canned = Canned {
                    results: e.results,
                    fail_times: e.fail_times,
                    fail_mode: e.fail_mode,
                };
                if src.canned.insert(fp.clone(), canned).is_some() {
                    return Err(invalid(&path, format!("two entries share fingerprint {fp}")));
                }
            }
        } else if let Some(fp) = name.strip_suffix(".json") {
            if fp.len() == 64 && fp.bytes().all(|b| b.is_ascii_hexdigit()) {
                let results = read_json(&path)?;
                check_results(&path, &results)?;
                src.canned.insert(
                    fp.to_ascii_lowercase(),
                    Canned {
                        results,
                        fail_times: 0,
                        fail_mode: FailMode::default(),
                    },
                );
            }
        }
    }
    Ok(src)
}

fn empty_results() -> Vec<u8> {
    br#"{"head":{"vars":[]},"results":{"bindings":[]}}"#.to_vec()
}

fn slice(results: &Value, query: &str) -> Vec<u8> {
    let (limit, offset) = limit_offset(query);
    let mut doc = results.clone();
    if let Some(rows) = doc.pointer_mut("/results/bindings").and_then(Value::as_array_mut) {
        let start = offset.min(rows.len());
        let end = limit.map_or(rows.len(), |l| start.saturating_add(l).min(rows.len()));
        *rows = rows[start..end].to_vec();
    }
    serde_json::to_vec(&doc).expect("json value serializes")
}

/// The fixture source addressed by an endpoint URL.
pub fn source_of_endpoint(endpoint: &str) -> Option<String> {
    let url = url::Url::parse(endpoint).ok()?;
    url.path_segments()?.next().filter(|s| !s.is_empty()).map(str::to_string)
}

/// An in-process fetcher answering from [`FixtureData`], logging every
/// request it sees.
#[derive(Debug)]
pub struct CannedFetcher {
    data: Arc<FixtureData>,
    log: Mutex<Vec<(String, String)>>,
}

impl CannedFetcher {
    pub fn new(data: Arc<FixtureData>) -> Self {
        CannedFetcher {
            data,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn load(dir: &Path) -> Result<Self, FixtureError> {
        Ok(Self::new(Arc::new(FixtureData::load(dir)?)))
    }

    /// `(endpoint, query)` of every request so far.
    pub fn requests(&self) -> Vec<(String, String)> {
        self.log.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().unwrap().len()
    }
}

impl ResultsFetcher for CannedFetcher {
    fn fetch(&self, endpoint: &str, query: &str, _timeout: Duration) -> Result<Vec<u8>, FetchError> {
        self.log
            .lock()
            .unwrap()
            .push((endpoint.to_string(), query.to_string()));
        let Some(source) = source_of_endpoint(endpoint) else {
            return Err(FetchError::Unreachable(format!("{endpoint}: not a fixture endpoint")));
        };
        match self.data.respond(&source, query) {
            FixtureResponse::Results(bytes) => Ok(bytes),
            FixtureResponse::Status(code, _) => Err(FetchError::Status(code)),
            FixtureResponse::Timeout => Err(FetchError::Timeout),
            FixtureResponse::Down => Err(FetchError::Unreachable("connection refused".into())),
        }
    }
}

#[derive(Deserialize)]
struct QueryParam {
    query: Option<String>,
}

async fn answer(data: Arc<FixtureData>, source: String, query: Option<String>) -> Response {
    let Some(query) = query else {
        return (StatusCode::BAD_REQUEST, "missing query parameter\n").into_response();
    };
    match data.respond(&source, &query) {
        FixtureResponse::Results(bytes) => ([(header::CONTENT_TYPE, SPARQL_RESULTS_JSON)], bytes).into_response(),
        FixtureResponse::Status(code, body) => {
            (StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), body).into_response()
        }
        FixtureResponse::Timeout => (StatusCode::GATEWAY_TIMEOUT, "scripted timeout\n").into_response(),
        FixtureResponse::Down => (StatusCode::SERVICE_UNAVAILABLE, "source is down\n").into_response(),
    }
}

/// HTTP routes: `GET|POST /{source}/sparql`.
pub fn fixture_router(data: Arc<FixtureData>) -> Router {
    Router::new()
        .route(
            "/{source}/sparql",
            get(
                |State(data): State<Arc<FixtureData>>, UrlPath(source): UrlPath<String>, Query(q): Query<QueryParam>| {
                    answer(data, source, q.query)
                },
            )
            .post(
                |State(data): State<Arc<FixtureData>>, UrlPath(source): UrlPath<String>, Form(q): Form<QueryParam>| {
                    answer(data, source, q.query)
                },
            ),
        )
        .with_state(data)
}
