//! Harvesting entity rows from the configured SPARQL endpoints.

mod fetch;
mod pool;
mod snapshot;

use std::collections::{BTreeMap, HashMap};
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PortalConfig;
use crate::rdf::{parse_sparql_results, BindingTable, Iri, Literal, MalformedResults, Term};

pub use fetch::{CachingFetcher, FetchError, HttpFetcher, ResultsFetcher, MAX_GET_QUERY_BYTES, SPARQL_RESULTS_JSON};
pub use pool::{fan_out, PER_ENDPOINT_CONCURRENCY};
pub use snapshot::{load_snapshot, run_info_path, save_snapshot, SnapshotError, SNAPSHOT_SCHEMA_VERSION};

pub const TIMEOUT_ENV: &str = "LODWEAVER_HTTP_TIMEOUT_SECS";

#[derive(Debug, Clone, PartialEq)]
pub struct FetchOptions {
    pub page_size: usize,
    pub max_pages: usize,
    pub timeout: Duration,
    pub retries: u32,
    /// Seconds to wait before the first retry; doubles on each further one.
    pub backoff_base: f64,
    /// Global cap on concurrently running requests.
    pub parallelism: usize,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            page_size: 10_000,
            max_pages: 100,
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff_base: 1.0,
            parallelism: 8,
        }
    }
}

impl FetchOptions {
    /// Applies `LODWEAVER_HTTP_TIMEOUT_SECS` when it holds a positive number.
    pub fn with_env_overrides(mut self) -> Self {
        if let Some(secs) = std::env::var(TIMEOUT_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| *s > 0.0)
        {
            self.timeout = Duration::from_secs_f64(secs);
        }
        self
    }

    fn backoff(&self, retry: u32) -> Duration {
        Duration::from_secs_f64((self.backoff_base * 2f64.powi(retry as i32)).max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("endpoint answered HTTP {0}")]
    HttpStatus(u16),
    #[error(transparent)]
    MalformedResults(#[from] MalformedResults),
    #[error("page limit reached with a full final page; {} rows fetched so far", partial.len())]
    PageLimitExceeded { partial: BindingTable, pages: usize },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no dataset/category pair produced any record")]
    NoUsablePairs,
}

/// Sends one request with retry on transient failures.
pub fn fetch_with_retry(
    endpoint: &str,
    query: &str,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
) -> Result<BindingTable, SelectError> {
    let mut attempt = 0;
    loop {
        match fetcher.fetch(endpoint, query, opts.timeout) {
            Ok(bytes) => return Ok(parse_sparql_results(&bytes)?),
            Err(e) if e.is_transient() && attempt < opts.retries => {
                let wait = opts.backoff(attempt);
                log::debug!("{endpoint}: {e}; retry {} in {wait:?}", attempt + 1);
                thread::sleep(wait);
                attempt += 1;
            }
            Err(FetchError::Status(code)) => return Err(SelectError::HttpStatus(code)),
            Err(FetchError::Timeout) => return Err(SelectError::EndpointUnreachable("timed out".into())),
            Err(FetchError::Unreachable(reason)) => return Err(SelectError::EndpointUnreachable(reason)),
        }
    }
}

fn paged_query(query: &str, limit: usize, offset: usize) -> String {
    format!("{}\nLIMIT {limit} OFFSET {offset}", query.trim_end())
}

/// Like [`execute_select`], also reporting how many pages were requested.
pub fn execute_select_paged(
    endpoint: &str,
    query: &str,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
) -> Result<(BindingTable, usize), SelectError> {
    let page_size = opts.page_size.max(1);
    let mut table = BindingTable::default();
    for page in 0..opts.max_pages.max(1) {
        let q = paged_query(query, page_size, page * page_size);
        let rows = fetch_with_retry(endpoint, &q, opts, fetcher)?;
        let n = rows.len();
        table.extend(rows);
        if n < page_size {
            return Ok((table, page + 1));
        }
    }
    Err(SelectError::PageLimitExceeded {
        partial: table,
        pages: opts.max_pages.max(1),
    })
}

/// Runs a SELECT (without LIMIT/OFFSET) page by page until a short page.
pub fn execute_select(
    endpoint: &str,
    query: &str,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
) -> Result<BindingTable, SelectError> {
    execute_select_paged(endpoint, query, opts, fetcher).map(|(t, _)| t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub dataset_id: String,
    pub category_id: String,
    pub entity: Iri,
    pub label: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, Vec<Term>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStat {
    pub dataset_id: String,
    pub category_id: String,
    pub rows: usize,
    pub pages: usize,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestionSnapshot {
    pub created_at: DateTime<Utc>,
    pub records: Vec<ExtractionRecord>,
    /// Keyed by (dataset_id, category_id).
    pub source_stats: BTreeMap<(String, String), SourceStat>,
}

impl IngestionSnapshot {
    pub fn total_rows(&self) -> usize {
        self.source_stats.values().map(|s| s.rows).sum()
    }

    pub fn failed_pairs(&self) -> impl Iterator<Item = &SourceStat> {
        self.source_stats.values().filter(|s| s.error.is_some())
    }
}

const ORDER_CLAUSE: &str = "ORDER BY ?entity";

/// Extraction queries get a stable order so OFFSET paging is well defined.
pub fn extraction_query(query: &str) -> String {
    if query.to_ascii_uppercase().contains("ORDER BY") {
        query.trim_end().to_string()
    } else {
        format!("{}\n{ORDER_CLAUSE}", query.trim_end())
    }
}

/// Converts binding rows into records, merging repeated entities.
fn rows_to_records(dataset_id: &str, category_id: &str, table: BindingTable) -> Vec<ExtractionRecord> {
    let mut records: Vec<ExtractionRecord> = Vec::new();
    let mut by_entity: HashMap<Iri, usize> = HashMap::new();
    for row in table.rows {
        let Some(entity) = row.get("entity").and_then(Term::as_iri).cloned() else {
            log::warn!("{dataset_id}/{category_id}: row without an IRI ?entity dropped");
            continue;
        };
        let label = match row.get("label") {
            Some(Term::Literal(l)) => l.lexical().trim().to_string(),
            Some(Term::Iri(i)) => i.to_string(),
            _ => String::new(),
        };
        if label.is_empty() {
            log::warn!("{dataset_id}/{category_id}: {entity} has an empty label; dropped");
            continue;
        }
        let attributes = row
            .into_iter()
            .filter(|(var, _)| var != "entity" && var != "label");
        match by_entity.get(&entity) {
            Some(&i) => {
                let rec = &mut records[i];
                if rec.label != label {
                    push_unique(rec.attributes.entry("label".into()).or_default(), Term::Literal(Literal::simple(label)));
                }
                for (var, term) in attributes {
                    push_unique(rec.attributes.entry(var).or_default(), term);
                }
            }
            None => {
                let mut rec = ExtractionRecord {
                    dataset_id: dataset_id.to_string(),
                    category_id: category_id.to_string(),
                    entity: entity.clone(),
                    label,
                    attributes: BTreeMap::new(),
                };
                for (var, term) in attributes {
                    push_unique(rec.attributes.entry(var).or_default(), term);
                }
                by_entity.insert(entity, records.len());
                records.push(rec);
            }
        }
    }
    records
}

fn push_unique(list: &mut Vec<Term>, term: Term) {
    if !list.contains(&term) {
        list.push(term);
    }
}

/// Runs every configured extraction query and assembles a snapshot.
///
/// A pair whose endpoint fails is recorded in the stats with zero rows and
/// an error note; the run only fails when no pair yields any record.
pub fn ingest(
    cfg: &PortalConfig,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
) -> Result<IngestionSnapshot, IngestError> {
    let mut datasets: Vec<_> = cfg.datasets.iter().collect();
    datasets.sort_by(|a, b| a.id.cmp(&b.id));
    let mut categories: Vec<_> = cfg.categories.iter().collect();
    categories.sort_by(|a, b| a.id.cmp(&b.id));

    let mut jobs = Vec::new();
    for d in &datasets {
        for c in &categories {
            match c.extraction_queries.get(&d.id) {
                Some(q) => jobs.push((d.endpoint.clone(), (d.id.clone(), c.id.clone(), d.endpoint.clone(), q.clone()))),
                None => log::warn!("category `{}` has no query for dataset `{}`; skipped", c.id, d.id),
            }
        }
    }

    let outcomes = fan_out(jobs, opts.parallelism, |(dataset_id, category_id, endpoint, query)| {
        let started = Instant::now();
        let result = execute_select_paged(&endpoint, &extraction_query(&query), opts, fetcher);
        let mut stat = SourceStat {
            dataset_id: dataset_id.clone(),
            category_id: category_id.clone(),
            ..SourceStat::default()
        };
        let table = match result {
            Ok((table, pages)) => {
                stat.pages = pages;
                table
            }
            Err(SelectError::PageLimitExceeded { partial, pages }) => {
                log::warn!("{dataset_id}/{category_id}: page limit reached; data is partial");
                stat.pages = pages;
                stat.error = Some(format!("partial: page limit of {pages} reached"));
                partial
            }
            Err(e) => {
                log::warn!("{dataset_id}/{category_id}: {e}");
                stat.error = Some(e.to_string());
                BindingTable::default()
            }
        };
        stat.rows = table.len();
        stat.duration_ms = started.elapsed().as_millis() as u64;
        let records = rows_to_records(&dataset_id, &category_id, table);
        (stat, records)
    });

    let mut snapshot = IngestionSnapshot {
        created_at: Utc::now(),
        records: Vec::new(),
        source_stats: BTreeMap::new(),
    };
    for (stat, records) in outcomes {
        snapshot.records.extend(records);
        snapshot
            .source_stats
            .insert((stat.dataset_id.clone(), stat.category_id.clone()), stat);
    }
    if snapshot.records.is_empty() {
        return Err(IngestError::NoUsablePairs);
    }
    Ok(snapshot)
}
