use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lodweaver::api::{router, ServerState, GENERATION_HEADER};
use lodweaver::fixture::CannedFetcher;
use lodweaver::ingest::{FetchError, ResultsFetcher};
use lodweaver::relations::expansion_query;
use serde_json::{json, Value};
use tower::ServiceExt;

use super::{entity_of, fast_opts, fetcher, run_pipeline, Pipeline, WDT};

pub struct Reply {
    pub status: StatusCode,
    pub generation: Option<u64>,
    pub body: Value,
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    let resp = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let generation = resp
        .headers()
        .get(GENERATION_HEADER)
        .map(|v| v.to_str().unwrap().parse().unwrap());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    Reply { status, generation, body }
}

pub fn installed(fetcher: Arc<dyn ResultsFetcher>) -> (Arc<ServerState>, Pipeline) {
    let p = run_pipeline();
    let state = ServerState::new(fetcher, fast_opts());
    state.install(p.cfg.clone(), p.store.clone());
    (state, p)
}

pub fn app() -> (Router, Pipeline) {
    let (state, p) = installed(fetcher());
    (router(state, &[]), p)
}

pub fn id_of(p: &Pipeline, member: &str) -> String {
    let e = entity_of(p, member);
    p.store.suffix_of(&e.minted).unwrap().to_string()
}

/// Adds `extra` literal-valued relations to the wikidata expansion answer
/// for one member.
pub struct Padded {
    pub inner: CannedFetcher,
    pub member: lodweaver::Iri,
    pub extra: usize,
}

impl ResultsFetcher for Padded {
    fn fetch(&self, endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<u8>, FetchError> {
        if endpoint.contains("wikidata") && query.starts_with(&expansion_query(&self.member)) {
            let base: Value = serde_json::from_slice(&self.inner.fetch(endpoint, query, timeout)?).unwrap();
            let mut bindings = base["results"]["bindings"].as_array().unwrap().clone();
            if query.trim_end().ends_with("OFFSET 0") {
                for i in 0..self.extra {
                    bindings.push(json!({
                        "p": {"type": "uri", "value": format!("{WDT}P527")},
                        "o": {"type": "literal", "value": format!("part {i:03}")},
                    }));
                }
            }
            let doc = json!({"head": {"vars": ["s", "p", "o"]}, "results": {"bindings": bindings}});
            return Ok(serde_json::to_vec(&doc).unwrap());
        }
        self.inner.fetch(endpoint, query, timeout)
    }
}

