//! Read-only JSON API over one immutable store + index generation.
//!
//! The current generation sits behind a single reference that is replaced
//! wholesale on reload; each request clones the reference once and answers
//! entirely from it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use lru::LruCache;
use serde::Serialize;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::config::PortalConfig;
use crate::index::{build_indexes, CategoryIndex, MatchClass, SuggestError};
use crate::ingest::{FetchOptions, ResultsFetcher};
use crate::rdf::Iri;
use crate::reconcile::{AttributeValue, MINTED_SUFFIX_LEN};
use crate::relations::{
    assemble_insight, expand_relations, filter_relations, template_for, InsightCard, Relation, RelationFilter,
    RelationSet, RelationsError,
};
use crate::store::ReconciledStore;

pub const ADDR_ENV: &str = "LODWEAVER_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const GENERATION_HEADER: &str = "x-lodweaver-generation";
pub const RELATIONS_PAGE_SIZE: usize = 50;
pub const RELATION_CACHE_SIZE: usize = 1024;
pub const DEFAULT_SUGGEST_LIMIT: usize = 10;
pub const MAX_SUGGEST_LIMIT: usize = 100;

/// One immutable generation: config, store and the indexes built from it.
#[derive(Debug)]
pub struct Generation {
    pub cfg: PortalConfig,
    pub store: ReconciledStore,
    pub indexes: BTreeMap<String, CategoryIndex>,
    pub generation: u64,
}

type RelationCache = LruCache<(u64, Iri), Arc<RelationSet>>;

/// Shared server state: the current generation plus the outbound fetcher
/// used for relation expansion and insight cards.
pub struct ServerState {
    current: RwLock<Option<Arc<Generation>>>,
    fetcher: Arc<dyn ResultsFetcher>,
    opts: FetchOptions,
    cache: Mutex<RelationCache>,
}

impl ServerState {
    /// A state with no generation yet; every route answers 503 until
    /// [`ServerState::install`] runs.
    pub fn new(fetcher: Arc<dyn ResultsFetcher>, opts: FetchOptions) -> Arc<Self> {
        Arc::new(ServerState {
            current: RwLock::new(None),
            fetcher,
            opts,
            cache: Mutex::new(LruCache::new(NonZeroUsize::new(RELATION_CACHE_SIZE).unwrap())),
        })
    }

    pub fn current(&self) -> Option<Arc<Generation>> {
        self.current.read().unwrap().clone()
    }

    pub fn generation(&self) -> u64 {
        self.current().map_or(0, |g| g.generation)
    }

    /// Builds indexes for `store` and swaps in the result as the next
    /// generation. Returns the new generation number.
    pub fn install(&self, cfg: PortalConfig, store: ReconciledStore) -> u64 {
        let mut slot = self.current.write().unwrap();
        let generation = slot.as_ref().map_or(1, |g| g.generation + 1);
        let indexes = build_indexes(store.entities.values(), &cfg.category_ids(), generation);
        *slot = Some(Arc::new(Generation {
            cfg,
            store,
            indexes,
            generation,
        }));
        generation
    }

    /// Swaps in prebuilt indexes. Every index entry must name an entity of
    /// `store`; otherwise nothing changes.
    pub fn install_prebuilt(
        &self,
        cfg: PortalConfig,
        store: ReconciledStore,
        mut indexes: BTreeMap<String, CategoryIndex>,
    ) -> Result<u64, String> {
        for (category, idx) in &indexes {
            if let Some(e) = idx.entries().iter().find(|e| !store.entities.contains_key(&e.minted)) {
                return Err(format!("index {category} names {} which the store lacks", e.minted));
            }
        }
        for c in cfg.category_ids() {
            if !indexes.contains_key(&c) {
                return Err(format!("no index for category {c}"));
            }
        }
        let mut slot = self.current.write().unwrap();
        let generation = slot.as_ref().map_or(1, |g| g.generation + 1);
        for idx in indexes.values_mut() {
            idx.generation = generation;
        }
        *slot = Some(Arc::new(Generation {
            cfg,
            store,
            indexes,
            generation,
        }));
        Ok(generation)
    }

    fn relations_for(&self, g: &Generation, minted: &Iri) -> Result<Arc<RelationSet>, RelationsError> {
        let key = (g.generation, minted.clone());
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let set = Arc::new(expand_relations(minted, &g.store, &g.cfg, &self.opts, self.fetcher.as_ref())?);
        if set.errors.is_empty() {
            self.cache.lock().unwrap().put(key, set.clone());
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    fn not_ready() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "not_ready", "no store is loaded yet")
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

fn with_generation(generation: u64, body: Value) -> Response {
    let mut resp = Json(body).into_response();
    resp.headers_mut().insert(
        HeaderName::from_static(GENERATION_HEADER),
        HeaderValue::from_str(&generation.to_string()).unwrap(),
    );
    resp
}

type ApiResult = Result<Response, ApiError>;
type Params = Query<HashMap<String, String>>;

fn current(state: &ServerState) -> Result<Arc<Generation>, ApiError> {
    state.current().ok_or_else(ApiError::not_ready)
}

fn entity_id(g: &Generation, minted: &Iri) -> Option<String> {
    g.store.suffix_of(minted).map(str::to_string)
}

fn lookup(g: &Generation, id: &str) -> Result<Iri, ApiError> {
    let unknown = || ApiError::not_found("unknown_entity", format!("no entity with id {id}"));
    if id.len() != MINTED_SUFFIX_LEN || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(unknown());
    }
    g.store
        .entity_by_suffix(&id.to_ascii_lowercase())
        .map(|e| e.minted.clone())
        .ok_or_else(unknown)
}

async fn meta(State(state): State<Arc<ServerState>>) -> ApiResult {
    let g = current(&state)?;
    let categories: Vec<Value> = g
        .cfg
        .categories
        .iter()
        .map(|c| json!({"id": c.id, "label": c.label, "color": c.color, "sound_url": c.sound_url}))
        .collect();
    let datasets: Vec<Value> = g
        .cfg
        .datasets
        .iter()
        .map(|d| json!({"id": d.id, "label": d.label, "metadata": d.metadata}))
        .collect();
    let highlights: Vec<Value> = g
        .cfg
        .highlights
        .iter()
        .map(|h| {
            let resolved = g.store.resolve(&h.entity_iri).map(|e| e.minted.clone());
            json!({
                "category_id": h.category_id,
                "entity_iri": h.entity_iri,
                "caption": h.caption,
                "linked_to": h.linked_to,
                "resolved": resolved,
                "resolved_id": resolved.as_ref().and_then(|m| entity_id(&g, m)),
            })
        })
        .collect();
    Ok(with_generation(
        g.generation,
        json!({
            "generation": g.generation,
            "categories": categories,
            "datasets": datasets,
            "intro": g.cfg.intro,
            "carousel": g.cfg.carousel,
            "highlights": highlights,
        }),
    ))
}

#[derive(Serialize)]
struct SuggestionPayload<'a> {
    id: String,
    minted: &'a Iri,
    display_label: &'a str,
    category_id: &'a str,
    sources: &'a BTreeSet<String>,
    match_class: MatchClass,
}

async fn suggest(State(state): State<Arc<ServerState>>, Query(params): Params) -> ApiResult {
    let g = current(&state)?;
    let q = params.get("q").map(String::as_str).unwrap_or("");
    let category = params.get("category").map(String::as_str).unwrap_or("");
    let limit = match params.get("limit") {
        None => DEFAULT_SUGGEST_LIMIT,
        Some(v) => v
            .trim()
            .parse::<i64>()
            .map_err(|_| ApiError::bad_request("malformed_limit", format!("limit {v:?} is not an integer")))?
            .clamp(1, MAX_SUGGEST_LIMIT as i64) as usize,
    };
    let index = g
        .indexes
        .get(category)
        .ok_or_else(|| ApiError::bad_request("unknown_category", format!("unknown category {category:?}")))?;
    let hits = index.suggest(q, limit).map_err(|e| match e {
        SuggestError::EmptyQuery => ApiError::bad_request("empty_query", "query is empty"),
    })?;
    let payload: Vec<SuggestionPayload> = hits
        .iter()
        .map(|s| SuggestionPayload {
            id: entity_id(&g, &s.minted).unwrap_or_default(),
            minted: &s.minted,
            display_label: &s.display_label,
            category_id: &s.category_id,
            sources: &s.sources,
            match_class: s.match_class,
        })
        .collect();
    Ok(with_generation(g.generation, serde_json::to_value(payload).unwrap()))
}

#[derive(Serialize)]
struct MemberPayload<'a> {
    iri: &'a Iri,
    sources: Vec<&'a str>,
}

async fn entity(State(state): State<Arc<ServerState>>, Path(id): Path<String>) -> ApiResult {
    let g = current(&state)?;
    let minted = lookup(&g, &id)?;
    let e = &g.store.entities[&minted];
    let members: Vec<MemberPayload> = e
        .members
        .iter()
        .map(|m| MemberPayload {
            iri: m,
            sources: e.member_sources.get(m).into_iter().flatten().map(String::as_str).collect(),
        })
        .collect();
    let attributes: &BTreeMap<String, Vec<AttributeValue>> = &e.attributes;
    Ok(with_generation(
        g.generation,
        json!({
            "generation": g.generation,
            "id": id.to_ascii_lowercase(),
            "minted": e.minted,
            "display_label": e.display_label,
            "labels": e.all_labels,
            "categories": e.categories,
            "sources": e.sources,
            "members": members,
            "attributes": attributes,
        }),
    ))
}

/// Filters `relations` and orders them by predicate label, displayed
/// object and source (stable).
pub fn ordered_relations(store: &ReconciledStore, relations: &[Relation], filter: &RelationFilter) -> Vec<Relation> {
    let mut keyed: Vec<(String, String, String, Relation)> = filter_relations(relations, filter)
        .into_iter()
        .map(|r| (r.predicate_label.clone(), r.display_object(store), r.source.clone(), r))
        .collect();
    keyed.sort_by(|a, b| (&a.0, &a.1, &a.2).cmp(&(&b.0, &b.1, &b.2)));
    keyed.into_iter().map(|(.., r)| r).collect()
}

fn relation_payload(g: &Generation, r: &Relation) -> Value {
    let mut v = serde_json::to_value(r).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.insert("object_label".into(), json!(r.display_object(&g.store)));
    obj.insert(
        "object_id".into(),
        json!(r.object_entity.as_ref().and_then(|m| entity_id(g, m))),
    );
    v
}

fn relation_filter(params: &HashMap<String, String>) -> Result<RelationFilter, ApiError> {
    let non_empty = |k: &str| params.get(k).map(|v| v.trim()).filter(|v| !v.is_empty());
    let relation_type = non_empty("relation_type")
        .map(|t| {
            Iri::parse(t).map_err(|_| ApiError::bad_request("malformed_relation_type", format!("{t:?} is not an IRI")))
        })
        .transpose()?;
    Ok(RelationFilter {
        relation_type,
        category: non_empty("category").map(str::to_string),
        source: non_empty("source").map(str::to_string),
    })
}

async fn relations(State(state): State<Arc<ServerState>>, Path(id): Path<String>, Query(params): Params) -> ApiResult {
    let g = current(&state)?;
    let minted = lookup(&g, &id)?;
    let page = match params.get("page").map(|p| p.trim()) {
        None | Some("") => 0,
        Some(p) => p
            .parse::<usize>()
            .map_err(|_| ApiError::bad_request("malformed_page", format!("page {p:?} is not a non-negative integer")))?,
    };
    let filter = relation_filter(&params)?;
    let set = {
        let (state, g, minted) = (state.clone(), g.clone(), minted.clone());
        tokio::task::spawn_blocking(move || state.relations_for(&g, &minted))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(|e| ApiError::not_found("unknown_entity", e.to_string()))?
    };
    let ordered = ordered_relations(&g.store, &set.relations, &filter);
    let total = ordered.len();
    let slice: Vec<Value> = ordered
        .iter()
        .skip(page.saturating_mul(RELATIONS_PAGE_SIZE))
        .take(RELATIONS_PAGE_SIZE)
        .map(|r| relation_payload(&g, r))
        .collect();
    Ok(with_generation(
        g.generation,
        json!({
            "generation": g.generation,
            "id": id.to_ascii_lowercase(),
            "total": total,
            "page": page,
            "page_size": RELATIONS_PAGE_SIZE,
            "relations": slice,
            "errors": set.errors,
        }),
    ))
}

async fn insight(State(state): State<Arc<ServerState>>, Path(id): Path<String>) -> ApiResult {
    let g = current(&state)?;
    let minted = lookup(&g, &id)?;
    let card: InsightCard = {
        let (state, g, minted) = (state.clone(), g.clone(), minted.clone());
        tokio::task::spawn_blocking(move || {
            let template = template_for(&g.cfg, &g.store, &minted)?;
            assemble_insight(&minted, template, &g.store, &g.cfg, &state.opts, state.fetcher.as_ref())
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| match e {
            RelationsError::NoTemplate(m) => ApiError::not_found("no_template", format!("no insight template for {m}")),
            RelationsError::UnknownEntity(m) => ApiError::not_found("unknown_entity", format!("unknown entity {m}")),
        })?
    };
    let mut body = serde_json::to_value(&card).unwrap();
    let obj = body.as_object_mut().unwrap();
    obj.insert("generation".into(), json!(g.generation));
    obj.insert("id".into(), json!(id.to_ascii_lowercase()));
    Ok(with_generation(g.generation, body))
}

async fn health(State(state): State<Arc<ServerState>>) -> ApiResult {
    let g = current(&state)?;
    Ok(with_generation(
        g.generation,
        json!({"status": "ok", "generation": g.generation, "entity_count": g.store.entities.len()}),
    ))
}

async fn fallback() -> ApiError {
    ApiError::not_found("not_found", "no such route")
}

/// The API routes. `cors_origins` lists allowed browser origins; `*`
/// allows any.
pub fn router(state: Arc<ServerState>, cors_origins: &[String]) -> Router {
    let mut app = Router::new()
        .route("/api/meta", get(meta))
        .route("/api/suggest", get(suggest))
        .route("/api/entity/{id}", get(entity))
        .route("/api/entity/{id}/relations", get(relations))
        .route("/api/entity/{id}/insight", get(insight))
        .route("/health", get(health))
        .fallback(fallback)
        .with_state(state);
    if !cors_origins.is_empty() {
        let allow = if cors_origins.iter().any(|o| o == "*") {
            AllowOrigin::any()
        } else {
            AllowOrigin::list(cors_origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET])
                .expose_headers([HeaderName::from_static(GENERATION_HEADER)]),
        );
    }
    app
}

/// The bind address: an explicit `flag`, else `LODWEAVER_ADDR`, else
/// [`DEFAULT_ADDR`].
pub fn bind_addr(flag: Option<&str>) -> Result<SocketAddr, String> {
    let raw = flag
        .map(str::to_string)
        .or_else(|| std::env::var(ADDR_ENV).ok().filter(|v| !v.trim().is_empty()))
        .unwrap_or_else(|| DEFAULT_ADDR.to_string());
    raw.trim().parse().map_err(|_| format!("invalid bind address {raw:?}"))
}
